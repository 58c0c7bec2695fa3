//! Detection primitives, composite detector models, and the blind-spot
//! coverage matrix.
//!
//! The composites are models of the published detection logic, parameterized
//! to reproduce its qualitative detect/miss behavior; they carry
//! `modeled: true` and are not claimed to be faithful reimplementations of
//! the original binaries or ML pipelines.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Matrix3, Vector3};
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::config::ConfigProfile;
use crate::phy::{preset, rf_features, RfFeatureVector, LEGIT_PRESETS};
use crate::pipeline::{run, session_exposure, RunError, RunOptions};
use crate::radio::{Environment, ScanDatabase};
use crate::trace::{MsgKind, RedirectVector, TraceEvent, BROADCAST};

/// The ten detection primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveId {
    SignalStrength,
    RrcFailure,
    ImsiExposing,
    RejectMsg,
    CellInfo,
    Redirection,
    NullCipher,
    TaCmd,
    RfChar,
    TimingError,
}

impl PrimitiveId {
    pub const ALL: [PrimitiveId; 10] = [
        PrimitiveId::SignalStrength,
        PrimitiveId::RrcFailure,
        PrimitiveId::ImsiExposing,
        PrimitiveId::RejectMsg,
        PrimitiveId::CellInfo,
        PrimitiveId::Redirection,
        PrimitiveId::NullCipher,
        PrimitiveId::TaCmd,
        PrimitiveId::RfChar,
        PrimitiveId::TimingError,
    ];
}

/// One primitive plus its tunable parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveMonitor {
    pub id: PrimitiveId,
    pub params: BTreeMap<String, f64>,
}

impl PrimitiveMonitor {
    pub fn new(id: PrimitiveId) -> Self {
        let mut params = BTreeMap::new();
        match id {
            PrimitiveId::SignalStrength => {
                params.insert("margin_db".into(), 20.0);
            }
            PrimitiveId::ImsiExposing => {
                params.insert("rate_threshold".into(), 0.3);
            }
            PrimitiveId::TaCmd => {
                params.insert("min_samples".into(), 3.0);
                params.insert("max_spread".into(), 1.0);
            }
            PrimitiveId::RfChar => {
                params.insert("min_samples".into(), 5.0);
            }
            PrimitiveId::TimingError => {
                params.insert("threshold_ns".into(), 1000.0);
            }
            _ => {}
        }
        PrimitiveMonitor { id, params }
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

pub fn all_monitors() -> Vec<PrimitiveMonitor> {
    PrimitiveId::ALL
        .iter()
        .map(|&id| PrimitiveMonitor::new(id))
        .collect()
}

type Tuple5 = (String, u16, u32, u32, u16);

fn broadcast_tuple(ev: &TraceEvent) -> Option<Tuple5> {
    if ev.dst != BROADCAST || ev.msg.kind != MsgKind::Sib(1) {
        return None;
    }
    Some((
        ev.msg.fields.plmn.clone()?,
        ev.msg.fields.tac?,
        ev.msg.fields.cell_id?,
        ev.msg.fields.earfcn?,
        ev.msg.fields.pci?,
    ))
}

fn baseline_tuples(db: &ScanDatabase) -> BTreeSet<Tuple5> {
    db.entries
        .iter()
        .map(|e| {
            (
                e.params.plmn.clone(),
                e.params.tac,
                e.params.cell_id,
                e.params.earfcn,
                e.params.pci,
            )
        })
        .collect()
}

fn ue_ids_in(events: &[TraceEvent]) -> Vec<String> {
    let mut ids = BTreeSet::new();
    for ev in events {
        for name in [&ev.src, &ev.dst] {
            if name.starts_with("ue-") {
                ids.insert(name.clone());
            }
        }
    }
    ids.into_iter().collect()
}

/// Evaluate one primitive over a completed trace against the baseline scan.
/// Returns whether it fired plus human-readable evidence.
pub fn run_primitive(
    monitor: &PrimitiveMonitor,
    events: &[TraceEvent],
    baseline: &ScanDatabase,
) -> (bool, String) {
    if events.is_empty() {
        return (false, "empty trace".into());
    }
    match monitor.id {
        PrimitiveId::SignalStrength => {
            let margin = monitor.param("margin_db", 20.0);
            let Some(best) = baseline.strongest().map(|e| e.rsrp_dbm) else {
                return (false, "no baseline".into());
            };
            for ev in events {
                if ev.dst != BROADCAST {
                    continue;
                }
                if let Some(rsrp) = ev.phy.as_ref().and_then(|p| p.rsrp_dbm) {
                    if rsrp > best + margin {
                        return (
                            true,
                            format!(
                                "{} at {:.1} dBm exceeds baseline best {:.1} by >{margin} dB",
                                ev.src, rsrp, best
                            ),
                        );
                    }
                }
            }
            // neighbor disappearance: a baseline carrier goes silent
            let seen: BTreeSet<(u32, u16)> = events
                .iter()
                .filter_map(broadcast_tuple)
                .map(|t| (t.3, t.4))
                .collect();
            for e in &baseline.entries {
                if e.params.rat == crate::radio::Rat::Lte
                    && !seen.contains(&(e.params.earfcn, e.params.pci))
                {
                    return (
                        true,
                        format!(
                            "baseline cell pci={} earfcn={} disappeared",
                            e.params.pci, e.params.earfcn
                        ),
                    );
                }
            }
            (false, "no anomalous power, no disappearance".into())
        }
        PrimitiveId::RrcFailure => match events.iter().find(|e| e.is_rrc_failure()) {
            Some(ev) => (true, format!("{} at t={}", ev.msg.kind.as_str(), ev.t_ms)),
            None => (false, "no RRC failure events".into()),
        },
        PrimitiveId::ImsiExposing => {
            let threshold = monitor.param("rate_threshold", 0.3);
            let ue_ids = ue_ids_in(events);
            let (sessions, exposing) = session_exposure(events, &ue_ids);
            if sessions == 0 {
                return (false, "no sessions".into());
            }
            let rate = exposing as f64 / sessions as f64;
            (
                rate > threshold,
                format!("{exposing}/{sessions} sessions exposing (rate {rate:.2})"),
            )
        }
        PrimitiveId::RejectMsg => match events.iter().find(|e| e.msg.kind == MsgKind::NasReject) {
            Some(ev) => (
                true,
                format!(
                    "nas reject cause {:?} at t={}",
                    ev.msg.fields.reject_cause, ev.t_ms
                ),
            ),
            None => (false, "no NAS reject".into()),
        },
        PrimitiveId::CellInfo => {
            let known = baseline_tuples(baseline);
            for ev in events {
                if let Some(t) = broadcast_tuple(ev) {
                    if !known.contains(&t) {
                        return (
                            true,
                            format!(
                                "unknown broadcast plmn={} tac={} cell_id={} earfcn={} pci={}",
                                t.0, t.1, t.2, t.3, t.4
                            ),
                        );
                    }
                }
            }
            (false, "all broadcast identities known".into())
        }
        PrimitiveId::Redirection => {
            // idleModeMobilityControlInfo is deliberately not matched: the
            // published monitors only watch SIB7 priorities and
            // redirectedCarrierInfo
            for ev in events {
                match ev.msg.fields.redirect_vector {
                    Some(RedirectVector::Sib7Priority)
                    | Some(RedirectVector::RedirectedCarrierInfo) => {
                        return (
                            true,
                            format!(
                                "{:?} at t={}",
                                ev.msg.fields.redirect_vector.unwrap(),
                                ev.t_ms
                            ),
                        );
                    }
                    _ => {}
                }
                if ev.msg.kind == MsgKind::Sib(7)
                    && ev.msg.fields.legacy_top_priority_earfcn.is_some()
                {
                    return (true, format!("sib7 legacy priority at t={}", ev.t_ms));
                }
            }
            (false, "no monitored redirection vector".into())
        }
        PrimitiveId::NullCipher => {
            match events
                .iter()
                .find(|e| e.msg.fields.null_cipher == Some(true))
            {
                Some(ev) => (true, format!("null cipher at t={}", ev.t_ms)),
                None => (false, "no null-cipher security mode".into()),
            }
        }
        PrimitiveId::TaCmd => {
            let min_samples = monitor.param("min_samples", 3.0) as usize;
            let max_spread = monitor.param("max_spread", 1.0) as u16;
            let mut by_src: BTreeMap<&str, Vec<u16>> = BTreeMap::new();
            for ev in events {
                if let Some(ta) = ev.phy.as_ref().and_then(|p| p.ta_command) {
                    by_src.entry(ev.src.as_str()).or_default().push(ta);
                }
            }
            for (src, tas) in &by_src {
                if tas.len() < min_samples {
                    continue;
                }
                let spread = tas.iter().max().unwrap() - tas.iter().min().unwrap();
                if spread <= max_spread {
                    return (
                        true,
                        format!("{src}: {} TA samples within {spread} unit(s)", tas.len()),
                    );
                }
            }
            (false, "no cell with degenerate TA spread".into())
        }
        PrimitiveId::RfChar => {
            let min_samples = monitor.param("min_samples", 5.0) as usize;
            let mut by_src: BTreeMap<&str, Vec<RfFeatureVector>> = BTreeMap::new();
            for ev in events {
                if let Some(rf) = ev.phy.as_ref().and_then(|p| p.rf) {
                    by_src.entry(ev.src.as_str()).or_default().push(rf);
                }
            }
            let clf = default_rf_classifier();
            for (src, samples) in &by_src {
                if samples.len() < min_samples {
                    continue;
                }
                if clf.source_anomalous(samples) {
                    return (
                        true,
                        format!("{src}: RF features outside legitimate cluster"),
                    );
                }
            }
            (false, "all RF sources within legitimate cluster".into())
        }
        PrimitiveId::TimingError => {
            let threshold = monitor.param("threshold_ns", 1000.0);
            for ev in events {
                if let Some(err) = ev.phy.as_ref().and_then(|p| p.frame_timing_error_ns) {
                    if err.abs() > threshold {
                        return (
                            true,
                            format!(
                                "{}: cumulative timing error {err:.0} ns at t={}",
                                ev.src, ev.t_ms
                            ),
                        );
                    }
                }
            }
            (false, "cumulative timing error within bounds".into())
        }
    }
}

/// All primitives that fire on a trace.
pub fn fired_primitives(events: &[TraceEvent], baseline: &ScanDatabase) -> BTreeSet<PrimitiveId> {
    all_monitors()
        .iter()
        .filter(|m| run_primitive(m, events, baseline).0)
        .map(|m| m.id)
        .collect()
}

/// PCA-space anomaly classifier over RF characteristic features.
///
/// Features are standardized by the average within-source spread, projected
/// onto the two leading principal components of the legitimate samples, and
/// scored by Mahalanobis distance from the legitimate centroid. The flag
/// threshold is 1.5x the largest distance any legitimate sample reaches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfClassifier {
    pub mean: [f64; 3],
    pub scale: [f64; 3],
    /// Two principal axes, rows in standardized feature space.
    pub components: [[f64; 3]; 2],
    /// Legitimate-sample variance along each component.
    pub pc_var: [f64; 2],
    pub threshold: f64,
}

impl RfClassifier {
    /// Fit on legitimate sources, one sample list per source.
    pub fn fit(sources: &[Vec<RfFeatureVector>]) -> Self {
        assert!(
            sources.iter().all(|s| s.len() >= 2),
            "need per-source spread"
        );
        let all: Vec<[f64; 3]> = sources.iter().flatten().map(|v| v.as_array()).collect();
        let n = all.len() as f64;
        let mut mean = [0.0; 3];
        for x in &all {
            for i in 0..3 {
                mean[i] += x[i] / n;
            }
        }
        // average within-source standard deviation per feature
        let mut scale = [0.0; 3];
        for s in sources {
            let m = s.len() as f64;
            let mut src_mean = [0.0; 3];
            for v in s {
                let x = v.as_array();
                for i in 0..3 {
                    src_mean[i] += x[i] / m;
                }
            }
            for i in 0..3 {
                let var: f64 = s
                    .iter()
                    .map(|v| (v.as_array()[i] - src_mean[i]).powi(2))
                    .sum::<f64>()
                    / (m - 1.0);
                scale[i] += var.sqrt() / sources.len() as f64;
            }
        }
        for s in &mut scale {
            assert!(*s > 0.0, "degenerate feature spread");
        }

        let standardized: Vec<Vector3<f64>> = all
            .iter()
            .map(|x| {
                Vector3::new(
                    (x[0] - mean[0]) / scale[0],
                    (x[1] - mean[1]) / scale[1],
                    (x[2] - mean[2]) / scale[2],
                )
            })
            .collect();
        let mut cov = Matrix3::zeros();
        for z in &standardized {
            cov += z * z.transpose();
        }
        cov /= n - 1.0;
        let eig = cov.symmetric_eigen();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut components = [[0.0; 3]; 2];
        let mut pc_var = [0.0; 2];
        for k in 0..2 {
            let col = eig.eigenvectors.column(order[k]);
            components[k] = [col[0], col[1], col[2]];
            pc_var[k] = eig.eigenvalues[order[k]].max(1e-12);
        }

        let mut clf = RfClassifier {
            mean,
            scale,
            components,
            pc_var,
            threshold: f64::INFINITY,
        };
        let max_legit = sources
            .iter()
            .flatten()
            .map(|v| clf.mahalanobis(v))
            .fold(0.0, f64::max);
        clf.threshold = 1.5 * max_legit;
        clf
    }

    /// Fit on freshly drawn samples of the six operator presets.
    pub fn fit_default_seeded(seed: u64) -> Self {
        let sources: Vec<Vec<RfFeatureVector>> = LEGIT_PRESETS
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let p = preset(name).expect("operator presets are built in");
                rf_features(&p, 200, seed.wrapping_mul(31).wrapping_add(i as u64))
            })
            .collect();
        RfClassifier::fit(&sources)
    }

    pub fn project(&self, v: &RfFeatureVector) -> [f64; 2] {
        let x = v.as_array();
        let z = [
            (x[0] - self.mean[0]) / self.scale[0],
            (x[1] - self.mean[1]) / self.scale[1],
            (x[2] - self.mean[2]) / self.scale[2],
        ];
        let mut out = [0.0; 2];
        for (o, row) in out.iter_mut().zip(&self.components) {
            *o = (0..3).map(|i| row[i] * z[i]).sum();
        }
        out
    }

    /// Mahalanobis distance from the legitimate centroid in PC space.
    pub fn mahalanobis(&self, v: &RfFeatureVector) -> f64 {
        let p = self.project(v);
        (p[0].powi(2) / self.pc_var[0] + p[1].powi(2) / self.pc_var[1]).sqrt()
    }

    /// Classify one source from its sample mean.
    pub fn source_anomalous(&self, samples: &[RfFeatureVector]) -> bool {
        assert!(!samples.is_empty());
        let n = samples.len() as f64;
        let mean = RfFeatureVector {
            cfo_hz: samples.iter().map(|s| s.cfo_hz).sum::<f64>() / n,
            sync_error_ns: samples.iter().map(|s| s.sync_error_ns).sum::<f64>() / n,
            mag_error_pct: samples.iter().map(|s| s.mag_error_pct).sum::<f64>() / n,
        };
        self.mahalanobis(&mean) > self.threshold
    }
}

static DEFAULT_RF_CLASSIFIER: Lazy<RfClassifier> =
    Lazy::new(|| RfClassifier::fit_default_seeded(0));

pub fn default_rf_classifier() -> &'static RfClassifier {
    &DEFAULT_RF_CLASSIFIER
}

/// The four composite detector models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorId {
    RayhunterLike,
    PhoenixLike,
    CellinfoLike,
    StatisticalLike,
}

impl DetectorId {
    pub const ALL: [DetectorId; 4] = [
        DetectorId::RayhunterLike,
        DetectorId::PhoenixLike,
        DetectorId::CellinfoLike,
        DetectorId::StatisticalLike,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorId::RayhunterLike => "rayhunter_like",
            DetectorId::PhoenixLike => "phoenix_like",
            DetectorId::CellinfoLike => "cellinfo_like",
            DetectorId::StatisticalLike => "statistical_like",
        }
    }

    pub fn parse(s: &str) -> Option<DetectorId> {
        DetectorId::ALL.iter().copied().find(|d| d.as_str() == s)
    }
}

/// Scoring profile of a composite detector. All models score 0..=100 and map
/// the score to a verdict through two thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorProfile {
    pub id: DetectorId,
    pub suspect_low: u8,
    pub detect_low: u8,
    /// These are models of published logic, not the original detectors.
    pub modeled: bool,
}

pub fn detector_profile(id: DetectorId) -> DetectorProfile {
    let (suspect_low, detect_low) = match id {
        DetectorId::RayhunterLike => (51, 51),
        DetectorId::PhoenixLike => (51, 51),
        DetectorId::CellinfoLike => (6, 51),
        DetectorId::StatisticalLike => (16, 51),
    };
    DetectorProfile {
        id,
        suspect_low,
        detect_low,
        modeled: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Detected,
    Suspect,
    Missed,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Detected => "detected",
            Classification::Suspect => "suspect",
            Classification::Missed => "missed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub detector: DetectorId,
    pub score: u8,
    pub verdict: Classification,
    pub fired_primitives: BTreeSet<PrimitiveId>,
    pub rationale: Vec<String>,
}

fn classify(profile: &DetectorProfile, score: u8) -> Classification {
    if score >= profile.detect_low {
        Classification::Detected
    } else if score >= profile.suspect_low {
        Classification::Suspect
    } else {
        Classification::Missed
    }
}

fn primitive_fired(
    id: PrimitiveId,
    events: &[TraceEvent],
    baseline: &ScanDatabase,
) -> (bool, String) {
    run_primitive(&PrimitiveMonitor::new(id), events, baseline)
}

/// PHOENIX-style NAS signature match: an Identity Request answered and then
/// rejected, or a reject that degrades the victim into an IMSI attach.
fn phoenix_signature(events: &[TraceEvent]) -> Option<String> {
    for ue in ue_ids_in(events) {
        let mut saw_identity_request = false;
        let mut saw_reject = false;
        for ev in events {
            let involved = ev.src == ue || ev.dst == ue;
            if !involved {
                continue;
            }
            match ev.msg.kind {
                MsgKind::IdentityRequest => saw_identity_request = true,
                MsgKind::NasReject => {
                    if saw_identity_request {
                        return Some(format!("{ue}: identity request followed by NAS reject"));
                    }
                    saw_reject = true;
                }
                MsgKind::AttachRequest if ev.msg.fields.contains_imsi && saw_reject => {
                    return Some(format!("{ue}: NAS reject degraded into IMSI attach"));
                }
                _ => {}
            }
        }
    }
    None
}

/// Evaluate one composite detector over a trace.
pub fn run_detector(
    id: DetectorId,
    events: &[TraceEvent],
    baseline: &ScanDatabase,
) -> DetectionVerdict {
    let profile = detector_profile(id);
    let mut rationale = Vec::new();
    let mut fired = BTreeSet::new();
    let score: u8 = match id {
        DetectorId::RayhunterLike => {
            // identity heuristic: explicit identity requests or IMSI paging
            let identity = events.iter().any(|e| {
                e.msg.kind == MsgKind::IdentityRequest
                    || (e.msg.kind == MsgKind::Paging && e.msg.fields.contains_imsi)
            });
            if identity {
                fired.insert(PrimitiveId::ImsiExposing);
                rationale.push("identity request or IMSI paging observed".into());
            }
            let (redir, why) = primitive_fired(PrimitiveId::Redirection, events, baseline);
            if redir {
                fired.insert(PrimitiveId::Redirection);
                rationale.push(why);
            }
            let (null, why) = primitive_fired(PrimitiveId::NullCipher, events, baseline);
            if null {
                fired.insert(PrimitiveId::NullCipher);
                rationale.push(why);
            }
            // lite cell check: only unknown operator codes are flagged
            let known_plmns: BTreeSet<&str> = baseline
                .entries
                .iter()
                .map(|e| e.params.plmn.as_str())
                .collect();
            let unknown_plmn = events
                .iter()
                .filter_map(|e| {
                    broadcast_tuple(e).and_then(|t| {
                        if known_plmns.contains(t.0.as_str()) {
                            None
                        } else {
                            Some(t.0)
                        }
                    })
                })
                .next();
            if let Some(plmn) = unknown_plmn {
                fired.insert(PrimitiveId::CellInfo);
                rationale.push(format!("unknown operator code {plmn}"));
            }
            if fired.is_empty() {
                rationale.push("no heuristic matched".into());
                0
            } else {
                100
            }
        }
        DetectorId::PhoenixLike => match phoenix_signature(events) {
            Some(why) => {
                fired.insert(PrimitiveId::ImsiExposing);
                fired.insert(PrimitiveId::RejectMsg);
                rationale.push(why);
                100
            }
            None => {
                rationale.push("no catching signature matched".into());
                0
            }
        },
        DetectorId::CellinfoLike => {
            let mut score = 0u8;
            let (sig, why) = primitive_fired(PrimitiveId::SignalStrength, events, baseline);
            if sig {
                fired.insert(PrimitiveId::SignalStrength);
                rationale.push(why);
                score += 55;
            }
            let (ci, why) = primitive_fired(PrimitiveId::CellInfo, events, baseline);
            if ci {
                fired.insert(PrimitiveId::CellInfo);
                rationale.push(why);
                score += 45;
            }
            if score == 0 {
                rationale.push("broadcast environment consistent with baseline".into());
            }
            score
        }
        DetectorId::StatisticalLike => {
            let ue_ids = ue_ids_in(events);
            let (sessions, exposing) = session_exposure(events, &ue_ids);
            let rate = if sessions == 0 {
                0.0
            } else {
                exposing as f64 / sessions as f64
            };
            rationale.push(format!(
                "exposing-session rate {rate:.2} vs benign band [0.00, 0.15]"
            ));
            if rate > 0.15 {
                fired.insert(PrimitiveId::ImsiExposing);
            }
            (rate * 100.0).round().clamp(0.0, 100.0) as u8
        }
    };
    DetectionVerdict {
        detector: id,
        score,
        verdict: classify(&profile, score),
        fired_primitives: fired,
        rationale,
    }
}

/// One instance's row of the coverage matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub instance: String,
    pub verdicts: Vec<DetectionVerdict>,
}

/// Instance x detector verdict grid plus the blind-spot summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageMatrix {
    pub detectors: Vec<DetectorId>,
    pub rows: Vec<CoverageRow>,
    /// Per detector: instances it misses.
    pub missed_by_detector: BTreeMap<String, Vec<String>>,
    /// Per instance: detectors it evades.
    pub evading_instances: BTreeMap<String, Vec<String>>,
}

impl CoverageMatrix {
    pub fn from_rows(detectors: Vec<DetectorId>, rows: Vec<CoverageRow>) -> Self {
        let mut missed_by_detector: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut evading_instances: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for row in &rows {
            for v in &row.verdicts {
                if v.verdict == Classification::Missed {
                    missed_by_detector
                        .entry(v.detector.as_str().to_string())
                        .or_default()
                        .push(row.instance.clone());
                    evading_instances
                        .entry(row.instance.clone())
                        .or_default()
                        .push(v.detector.as_str().to_string());
                }
            }
        }
        CoverageMatrix {
            detectors,
            rows,
            missed_by_detector,
            evading_instances,
        }
    }

    pub fn cell(&self, instance: &str, detector: DetectorId) -> Option<&DetectionVerdict> {
        self.rows
            .iter()
            .find(|r| r.instance == instance)?
            .verdicts
            .iter()
            .find(|v| v.detector == detector)
    }

    /// CSV export: one row per instance, one column per detector.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("instance");
        for d in &self.detectors {
            out.push(',');
            out.push_str(d.as_str());
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.instance);
            for v in &row.verdicts {
                out.push(',');
                out.push_str(v.verdict.as_str());
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Run one instance in the environment and evaluate the detector set on its
/// trace. The baseline is a scan of the environment before launch.
pub fn evaluate_instance(
    profile: &ConfigProfile,
    detectors: &[DetectorId],
    env: &Environment,
    opts: RunOptions,
) -> Result<CoverageRow, RunError> {
    let baseline = crate::radio::scan(env, 500, 1);
    let output = run(profile, env, opts)?;
    let verdicts = detectors
        .iter()
        .map(|&d| run_detector(d, &output.events, &baseline))
        .collect();
    Ok(CoverageRow {
        instance: profile.name.clone(),
        verdicts,
    })
}

/// Run every instance once (fixed seed) and build the full matrix.
pub fn build_coverage_matrix(
    instances: &[ConfigProfile],
    detectors: &[DetectorId],
    env: &Environment,
    opts: RunOptions,
) -> Result<CoverageMatrix, RunError> {
    let rows = instances
        .iter()
        .map(|p| evaluate_instance(p, detectors, env, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CoverageMatrix::from_rows(detectors.to_vec(), rows))
}
