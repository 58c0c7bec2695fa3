//! End-to-end attack pipeline: launch, connection hijacking, application.
//!
//! A run takes a validated configuration, a radio environment, and a seed,
//! and produces a deterministic protocol trace plus outcome counters. The
//! hostile cell's transmit power is calibrated so the configured dB margin
//! over the victim's serving cell is realized exactly; success then depends
//! only on the margin, the hijack method, and the victim's RRC state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{
    canonical_yaml, profile_hash, Adaptation, AppVariation, CellIteration, ConfigProfile,
    HijackMethod, Targeting,
};
use crate::phy::{
    frame_timing_series, preset, rf_features_with, ta_command, ClockModel, TaMode, TaModel,
    FRAME_PERIOD_MS, LEGIT_PRESETS,
};
use crate::radio::{
    apply_adaptation, distance, received_power, received_power_at, scan, AdaptationMode,
    CellParams, CellProfile, Environment, Rat, ScanDatabase,
};
use crate::rules::{check, Verdict};
use crate::trace::{
    to_jsonl, Layer, MsgKind, PhyInfo, ProtocolMessage, RedirectVector, TraceEvent, BROADCAST,
};
use crate::ue::{
    cell_label, handover_takeover_flow, hijack_success, jamming_takeover_flow,
    reselection_takeover_flow, RrcState, SuccessModel, UeContext,
};

/// Broadcast and physical-layer sampling period.
pub const BROADCAST_PERIOD_MS: u64 = 1000;
/// Dwell time per parameter set under round-robin cell iteration.
pub const ROTATION_DWELL_MS: u64 = 1000;
/// IMSI paging period for location tracking.
pub const LOC_TRACKING_PERIOD_MS: u64 = 5000;
/// Co-channel power advantage that silences a legitimate cell's broadcasts.
pub const JAMMING_SUPPRESSION_DB: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub duration_ms: u64,
    pub tick_ms: u64,
    pub success_model: SuccessModel,
    /// Trial index, folded into the seed so repeated trials differ.
    pub trial: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            duration_ms: 20_000,
            tick_ms: 100,
            success_model: SuccessModel::Deterministic,
            trial: 0,
        }
    }
}

/// Aggregate counters for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Outcomes {
    pub n_ues: usize,
    pub n_hijacked: usize,
    /// NAS sessions the hostile cell served (one per hijacked UE).
    pub n_sessions: usize,
    /// Sessions in which the permanent identity was exposed.
    pub n_exposing_sessions: usize,
    pub exposing_rate: f64,
    pub imsis_caught: Vec<String>,
    pub n_dos: usize,
    pub n_redirected: usize,
}

/// Reproducibility record emitted next to every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub profile_name: String,
    pub profile_sha256: String,
    pub seed: u64,
    pub trial: u64,
    pub success_model: SuccessModel,
    pub duration_ms: u64,
    pub n_events: usize,
    pub trace_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub events: Vec<TraceEvent>,
    pub outcomes: Outcomes,
    pub manifest: RunManifest,
    /// The profile actually executed, after dependency resolution.
    pub resolved_profile: ConfigProfile,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration rejected by the dependency checker:\n{0}")]
    Rejected(String),
    #[error("environment has no legitimate LTE cell")]
    NoServingCell,
    #[error("serialization: {0}")]
    Serde(#[from] crate::config::ProfileError),
}

/// Round-robin schedule: parameter-set index for each dwell window.
pub fn rotation_schedule(duration_ms: u64, dwell_ms: u64, n_sets: usize) -> Vec<usize> {
    assert!(dwell_ms > 0 && n_sets > 0);
    let windows = duration_ms.div_ceil(dwell_ms);
    (0..windows).map(|w| (w as usize) % n_sets).collect()
}

/// The launched hostile cells: the main LTE cell's parameter sets (one per
/// rotation slot) and any additional carriers.
#[derive(Debug, Clone)]
pub struct LaunchedCells {
    pub main_sets: Vec<CellParams>,
    pub main_tx_power_dbm: f64,
    pub additional: Vec<CellProfile>,
    pub ta_model: TaModel,
    pub clock: ClockModel,
    pub rf_preset: &'static str,
}

/// Realize the launch phase: derive broadcast parameters (adapted, manual,
/// or random), calibrate power to the configured margin over the strongest
/// legitimate cell, and pick the clock and RF behavior from the hardware
/// compensation flag.
pub fn launch_cells(
    profile: &ConfigProfile,
    env: &Environment,
    db: &ScanDatabase,
    rng: &mut ChaCha8Rng,
) -> Result<LaunchedCells, RunError> {
    let fbs_position = env.scanner_position;
    let best_legit = env
        .cells
        .iter()
        .filter(|c| c.legit && c.params.rat == Rat::Lte)
        .map(|c| received_power_at(c, fbs_position))
        .max_by(f64::total_cmp)
        .ok_or(RunError::NoServingCell)?;
    // power such that the margin holds at the monitoring point
    let main_tx_power_dbm = best_legit
        + profile.hijack.power_margin_db
        + (crate::radio::PATHLOSS_L0_DB + 10.0 * crate::radio::PATHLOSS_EXPONENT * 1.0f64.log10());

    let template = CellProfile {
        legit: false,
        tx_power_dbm: main_tx_power_dbm,
        position: fbs_position,
        ..CellProfile::default()
    };
    let n_sets = match profile.launch.cell_iteration {
        CellIteration::Fixed => 1,
        CellIteration::RoundRobin => 3,
    };
    let mut main_sets = Vec::with_capacity(n_sets);
    for _ in 0..n_sets {
        let params = if let Some(manual) = &profile.launch.manual_params {
            manual.clone()
        } else {
            match profile.launch.adaptation {
                Adaptation::Full => {
                    apply_adaptation(&template, db, AdaptationMode::Full, rng).params
                }
                Adaptation::None => CellParams::random(rng),
            }
        };
        main_sets.push(params);
    }
    main_sets.dedup();

    let additional = profile
        .launch
        .additional_cells
        .iter()
        .map(|p| CellProfile {
            params: p.clone(),
            legit: false,
            tx_power_dbm: main_tx_power_dbm,
            position: fbs_position,
            ..CellProfile::default()
        })
        .collect();

    let ta_model = TaModel {
        mode: if profile.launch.ta_diversification {
            TaMode::Diversified
        } else {
            TaMode::FbsDefault
        },
    };
    let (clock, rf_preset) = if profile.launch.hw_compensation {
        (ClockModel::gpsdo(), "rf_manip")
    } else {
        (ClockModel::uncompensated(), "fbs_b210")
    };
    Ok(LaunchedCells {
        main_sets,
        main_tx_power_dbm,
        additional,
        ta_model,
        clock,
        rf_preset,
    })
}

fn sib1_broadcast(
    cell: &CellProfile,
    rsrp: f64,
    rf_src: &str,
    rng: &mut ChaCha8Rng,
) -> (ProtocolMessage, PhyInfo) {
    let mut msg = ProtocolMessage::new(Layer::Rrc, MsgKind::Sib(1));
    msg.fields.plmn = Some(cell.params.plmn.clone());
    msg.fields.tac = Some(cell.params.tac);
    msg.fields.cell_id = Some(cell.params.cell_id);
    msg.fields.earfcn = Some(cell.params.earfcn);
    msg.fields.pci = Some(cell.params.pci);
    let rf = preset(rf_src).map(|p| rf_features_with(&p, 1, rng)[0]);
    (
        msg,
        PhyInfo {
            rsrp_dbm: Some(rsrp),
            rf,
            ..Default::default()
        },
    )
}

struct Sim<'a> {
    profile: &'a ConfigProfile,
    opts: RunOptions,
    env: Environment,
    launched: LaunchedCells,
    /// Index of the main hostile cell in `env.cells`.
    fbs_idx: usize,
    /// Indexes of additional hostile carriers.
    extra_idx: Vec<usize>,
    rng: ChaCha8Rng,
    events: Vec<TraceEvent>,
    outcomes: Outcomes,
    /// Per-UE: hijacked, selected for the application, stochastic draw done.
    hijacked: Vec<bool>,
    selected: Vec<bool>,
    attempted: Vec<bool>,
    served: Vec<bool>,
    timing: Vec<f64>,
    legit_timing: Vec<Vec<f64>>,
}

impl Sim<'_> {
    fn fbs_label(&self) -> String {
        cell_label(self.fbs_idx, &self.env.cells[self.fbs_idx])
    }

    fn push(&mut self, ev: TraceEvent) {
        self.events.push(ev);
    }

    fn broadcast_phase(&mut self, t: u64) {
        if !t.is_multiple_of(BROADCAST_PERIOD_MS) {
            return;
        }
        // round-robin rotation of the main cell's parameters
        if self.launched.main_sets.len() > 1 && t.is_multiple_of(ROTATION_DWELL_MS) {
            let slot = (t / ROTATION_DWELL_MS) as usize % self.launched.main_sets.len();
            self.env.cells[self.fbs_idx].params = self.launched.main_sets[slot].clone();
        }
        let fbs_earfcn = self.env.cells[self.fbs_idx].params.earfcn;
        let suppressing = self.profile.hijack.method == HijackMethod::Jamming
            && self.profile.hijack.power_margin_db >= JAMMING_SUPPRESSION_DB;
        let scanner = self.env.scanner_position;
        for i in 0..self.env.cells.len() {
            let cell = self.env.cells[i].clone();
            if cell.params.rat != Rat::Lte {
                continue;
            }
            let label = cell_label(i, &cell);
            if cell.legit {
                if suppressing && cell.params.earfcn == fbs_earfcn {
                    continue; // overpowered co-channel: silent to the monitor
                }
                let rsrp = received_power_at(&cell, scanner);
                let preset_name = LEGIT_PRESETS[i % LEGIT_PRESETS.len()];
                let (msg, mut phy) = sib1_broadcast(&cell, rsrp, preset_name, &mut self.rng);
                let frame = (t / FRAME_PERIOD_MS as u64) as usize;
                phy.frame_timing_error_ns = self.legit_timing[i].get(frame).copied();
                self.push(TraceEvent::new(t, label, BROADCAST, msg).with_phy(phy));
            } else {
                let best_legit = self
                    .env
                    .cells
                    .iter()
                    .filter(|c| c.legit && c.params.rat == Rat::Lte)
                    .map(|c| received_power_at(c, scanner))
                    .max_by(f64::total_cmp)
                    .unwrap_or(-100.0);
                let rsrp = best_legit + self.profile.hijack.power_margin_db;
                let (msg, mut phy) =
                    sib1_broadcast(&cell, rsrp, self.launched.rf_preset, &mut self.rng);
                let frame = (t / FRAME_PERIOD_MS as u64) as usize;
                phy.frame_timing_error_ns = self.timing.get(frame).copied();
                self.push(TraceEvent::new(t, label, BROADCAST, msg).with_phy(phy));
                if self.profile.app.variation == AppVariation::RedirectSib7 {
                    let legacy_earfcn = self
                        .env
                        .cells
                        .iter()
                        .find(|c| !c.legit && c.params.rat != Rat::Lte)
                        .map(|c| c.params.earfcn);
                    if let Some(e) = legacy_earfcn {
                        let mut sib7 = ProtocolMessage::new(Layer::Rrc, MsgKind::Sib(7));
                        sib7.fields.legacy_top_priority_earfcn = Some(e);
                        sib7.fields.redirect_vector = Some(RedirectVector::Sib7Priority);
                        self.push(TraceEvent::new(t, self.fbs_label(), BROADCAST, sib7));
                    }
                }
                if self.profile.launch.paging_reproduction {
                    let paging = ProtocolMessage::new(Layer::Rrc, MsgKind::Paging);
                    self.push(TraceEvent::new(t, self.fbs_label(), BROADCAST, paging));
                }
            }
        }
    }

    fn ta_phase(&mut self, t: u64) {
        if !t.is_multiple_of(BROADCAST_PERIOD_MS) {
            return;
        }
        for u in 0..self.env.ues.len() {
            let Some(srv) = self.env.ues[u].serving else {
                continue;
            };
            let cell = self.env.cells[srv].clone();
            if cell.params.rat != Rat::Lte {
                continue;
            }
            let model = if cell.legit {
                TaModel {
                    mode: TaMode::DistanceBased,
                }
            } else {
                self.launched.ta_model
            };
            let d = distance(cell.position, self.env.ues[u].position);
            let ta = ta_command(&model, d, &mut self.rng);
            let msg = ProtocolMessage::new(Layer::Mac, MsgKind::RrcReconfiguration);
            let ue_id = self.env.ues[u].ue_id.clone();
            self.push(
                TraceEvent::new(t, cell_label(srv, &cell), ue_id, msg).with_phy(PhyInfo {
                    ta_command: Some(ta),
                    ..Default::default()
                }),
            );
        }
    }

    fn hijack_phase(&mut self, t: u64) {
        let method = self.profile.hijack.method;
        let margin = self.profile.hijack.power_margin_db;
        let fbs = self.fbs_label();
        for u in 0..self.env.ues.len() {
            if self.attempted[u] || self.env.ues[u].in_dos(t) {
                continue;
            }
            let state = self.env.ues[u].rrc_state;
            // one decision per UE per run; failed victims are not retried
            self.attempted[u] = true;
            let ok = hijack_success(
                method,
                margin,
                state,
                self.opts.success_model,
                &mut self.rng,
            );
            if !ok {
                continue;
            }
            let serving_idx = self.env.ues[u].serving;
            let serving_label = serving_idx
                .map(|i| cell_label(i, &self.env.cells[i]))
                .unwrap_or_else(|| "none".to_string());
            let serving_rsrp = serving_idx
                .map(|i| received_power(&self.env.cells[i], &self.env.ues[u]))
                .unwrap_or(-100.0);
            let fbs_rsrp = serving_rsrp + margin;
            let ue_id = self.env.ues[u].ue_id.clone();
            let fbs_pci = self.env.cells[self.fbs_idx].params.pci;
            let flow = match method {
                HijackMethod::Jamming => jamming_takeover_flow(t, &ue_id, &fbs),
                HijackMethod::Handover => {
                    handover_takeover_flow(t, &ue_id, &serving_label, &fbs, fbs_pci, fbs_rsrp)
                }
                HijackMethod::CellReselection => reselection_takeover_flow(t, &ue_id, &fbs),
            };
            self.events.extend(flow);
            self.env.ues[u].serving = Some(self.fbs_idx);
            self.env.ues[u].rrc_state = RrcState::Connected;
            self.hijacked[u] = true;
            self.outcomes.n_hijacked += 1;
            self.selected[u] = match self.profile.app.targeting {
                Targeting::Arbitrary => true,
                Targeting::Adaptive => {
                    let f = self.profile.app.sampling_fraction.unwrap_or(1.0);
                    self.rng.gen_bool(f)
                }
                Targeting::Targeted => self.profile.app.target_ids.contains(&self.env.ues[u].imsi),
            };
        }
    }

    fn application_phase(&mut self, t: u64) {
        for u in 0..self.env.ues.len() {
            if !self.hijacked[u] || self.served[u] {
                continue;
            }
            self.served[u] = true;
            self.outcomes.n_sessions += 1;
            let fbs = self.fbs_label();
            let ue_id = self.env.ues[u].ue_id.clone();
            let attach = ProtocolMessage::new(Layer::Nas, MsgKind::AttachRequest);
            self.push(TraceEvent::new(t + 5, ue_id.clone(), fbs.clone(), attach));
            if !self.selected[u] {
                continue; // camped but untouched; no exposing traffic
            }
            self.run_variation(u, t + 6);
        }
        // periodic IMSI paging for location tracking
        let loc_tracking = self.profile.app.variation == AppVariation::LocTrackingCoarse
            || self.profile.app.variation == AppVariation::LocTrackingFine;
        if loc_tracking && t.is_multiple_of(LOC_TRACKING_PERIOD_MS) {
            for u in 0..self.env.ues.len() {
                if !self.hijacked[u] || !self.selected[u] {
                    continue;
                }
                self.page_for_location(u, t);
            }
        }
    }

    fn page_for_location(&mut self, u: usize, t: u64) {
        let fbs = self.fbs_label();
        let ue_id = self.env.ues[u].ue_id.clone();
        let mut page = ProtocolMessage::new(Layer::Rrc, MsgKind::Paging);
        page.fields.contains_imsi = true;
        page.fields.imsi = Some(self.env.ues[u].imsi.clone());
        self.push(TraceEvent::new(t + 1, fbs.clone(), BROADCAST, page));
        let mut resp = TraceEvent::new(
            t + 2,
            ue_id,
            fbs,
            ProtocolMessage::new(Layer::Rrc, MsgKind::RrcSetup),
        );
        if self.profile.app.variation == AppVariation::LocTrackingFine {
            let rsrp = received_power(&self.env.cells[self.fbs_idx], &self.env.ues[u]);
            resp = resp.with_phy(PhyInfo {
                rsrp_dbm: Some(rsrp),
                ..Default::default()
            });
        }
        self.push(resp);
    }

    fn run_variation(&mut self, u: usize, t: u64) {
        let cause = self.profile.app.reject_cause;
        match self.profile.app.variation {
            AppVariation::ImsiIdentityRequestReject => {
                self.identity_request_exchange(u, t);
                let mut rej = ProtocolMessage::new(Layer::Nas, MsgKind::NasReject);
                rej.fields.reject_cause = Some(cause);
                self.deliver_from_fbs(u, t + 2, rej);
            }
            AppVariation::ImsiRejectBased => {
                let mut rej = ProtocolMessage::new(Layer::Nas, MsgKind::NasReject);
                rej.fields.reject_cause = Some(cause);
                self.deliver_from_fbs(u, t, rej);
                // the cause-#9 handler re-attaches with the IMSI in clear
                if self.env.ues[u].identity_exposed {
                    self.outcomes
                        .imsis_caught
                        .push(self.env.ues[u].imsi.clone());
                }
            }
            AppVariation::ImsiIdentityRequestRelease => {
                self.identity_request_exchange(u, t);
                let rel = ProtocolMessage::new(Layer::Rrc, MsgKind::RrcRelease);
                self.deliver_from_fbs(u, t + 2, rel);
            }
            AppVariation::LocTrackingCoarse | AppVariation::LocTrackingFine => {
                // paging is emitted on the periodic schedule
            }
            AppVariation::Dos => {
                let mut rej = ProtocolMessage::new(Layer::Nas, MsgKind::NasReject);
                rej.fields.reject_cause = Some(cause);
                self.deliver_from_fbs(u, t, rej);
                self.outcomes.n_dos += 1;
            }
            AppVariation::RedirectSib7 => {
                // SIB7 broadcast carries the steering; release without vector
                let rel = ProtocolMessage::new(Layer::Rrc, MsgKind::RrcRelease);
                self.deliver_from_fbs(u, t, rel);
                if let Some(legacy) = self.legacy_idx() {
                    self.camp_on_legacy(u, t + 1, legacy);
                }
            }
            AppVariation::RedirectCarrierInfo | AppVariation::RedirectIdleModeMobility => {
                let vector = if self.profile.app.variation == AppVariation::RedirectCarrierInfo {
                    RedirectVector::RedirectedCarrierInfo
                } else {
                    RedirectVector::IdleModeMobilityControlInfo
                };
                let mut rel = ProtocolMessage::new(Layer::Rrc, MsgKind::RrcRelease);
                rel.fields.redirect_vector = Some(vector);
                rel.fields.target_earfcn =
                    self.legacy_idx().map(|i| self.env.cells[i].params.earfcn);
                self.deliver_from_fbs(u, t, rel);
            }
        }
    }

    fn legacy_idx(&self) -> Option<usize> {
        self.extra_idx
            .iter()
            .copied()
            .find(|&i| self.env.cells[i].params.rat != Rat::Lte)
    }

    fn camp_on_legacy(&mut self, u: usize, t: u64, legacy: usize) {
        self.env.ues[u].rrc_state = RrcState::Idle;
        self.env.ues[u].serving = Some(legacy);
        let attach = ProtocolMessage::new(Layer::Nas, MsgKind::AttachRequest);
        let label = cell_label(legacy, &self.env.cells[legacy]);
        let ue_id = self.env.ues[u].ue_id.clone();
        self.push(TraceEvent::new(t, ue_id, label, attach));
        self.outcomes.n_redirected += 1;
    }

    fn identity_request_exchange(&mut self, u: usize, t: u64) {
        let req = ProtocolMessage::new(Layer::Nas, MsgKind::IdentityRequest);
        self.deliver_from_fbs(u, t, req);
        if self.env.ues[u].identity_exposed {
            self.outcomes
                .imsis_caught
                .push(self.env.ues[u].imsi.clone());
        }
    }

    /// Send a message from the main hostile cell and let the UE react.
    fn deliver_from_fbs(&mut self, u: usize, t: u64, msg: ProtocolMessage) {
        let fbs = self.fbs_label();
        let ue_id = self.env.ues[u].ue_id.clone();
        self.push(TraceEvent::new(t, fbs, ue_id, msg.clone()));
        let mut ue = self.env.ues[u].clone();
        let reactions = crate::ue::handle_nas(&mut ue, &self.env, self.fbs_idx, &msg, t + 1);
        if msg.fields.redirect_vector.is_some() && ue.serving != self.env.ues[u].serving {
            self.outcomes.n_redirected += 1;
        }
        self.env.ues[u] = ue;
        self.events.extend(reactions);
    }
}

/// NAS reject causes that force the UE to reveal its permanent identity or
/// degrade it into an identifiable re-attach.
pub const EXPOSING_REJECT_CAUSES: [u8; 13] = [2, 3, 6, 7, 8, 9, 11, 12, 13, 14, 15, 22, 42];

fn message_exposes_identity(ev: &TraceEvent) -> bool {
    match ev.msg.kind {
        MsgKind::IdentityRequest => true,
        MsgKind::NasReject => ev
            .msg
            .fields
            .reject_cause
            .is_some_and(|c| EXPOSING_REJECT_CAUSES.contains(&c)),
        MsgKind::Paging => ev.msg.fields.contains_imsi,
        _ => false,
    }
}

/// Per-UE session exposure over a trace: a session is all NAS traffic of one
/// UE with hostile cells; it is exposing if any message in it reveals or
/// compels the permanent identity.
pub fn session_exposure(events: &[TraceEvent], ue_ids: &[String]) -> (usize, usize) {
    let mut n_sessions = 0;
    let mut n_exposing = 0;
    for ue in ue_ids {
        let mut has_session = false;
        let mut exposing = false;
        for ev in events {
            let with_fbs = ev.src.starts_with("fbs-") || ev.dst.starts_with("fbs-");
            if !with_fbs {
                continue;
            }
            let about_ue = ev.src == *ue
                || ev.dst == *ue
                || (ev.msg.kind == MsgKind::Paging
                    && ev.msg.fields.imsi.as_deref()
                        == events
                            .iter()
                            .find(|e| e.src == *ue && e.msg.fields.imsi.is_some())
                            .and_then(|e| e.msg.fields.imsi.as_deref()));
            if !about_ue {
                continue;
            }
            has_session = true;
            if message_exposes_identity(ev) {
                exposing = true;
            }
        }
        if has_session {
            n_sessions += 1;
            if exposing {
                n_exposing += 1;
            }
        }
    }
    (n_sessions, n_exposing)
}

/// Execute one full run. The profile is validated (and auto-resolved) first;
/// a rejected profile is an error. Identical inputs produce byte-identical
/// traces.
pub fn run(
    profile: &ConfigProfile,
    base_env: &Environment,
    opts: RunOptions,
) -> Result<RunOutput, RunError> {
    let db = scan(base_env, 500, 1);
    let report = check(profile, &db);
    if report.verdict == Verdict::Rejected {
        return Err(RunError::Rejected(report.render_text()));
    }
    let profile = report.profile;
    let seed = profile
        .seed
        .wrapping_add(opts.trial.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let launched = launch_cells(&profile, base_env, &db, &mut rng)?;
    let mut env = base_env.clone();
    let fbs_idx = env.cells.len();
    env.cells.push(CellProfile {
        params: launched.main_sets[0].clone(),
        legit: false,
        tx_power_dbm: launched.main_tx_power_dbm,
        position: env.scanner_position,
        ..CellProfile::default()
    });
    let mut extra_idx = Vec::new();
    for extra in &launched.additional {
        extra_idx.push(env.cells.len());
        env.cells.push(extra.clone());
    }

    let n_frames = (opts.duration_ms / FRAME_PERIOD_MS as u64) as usize + 1;
    let timing = frame_timing_series(&launched.clock, n_frames, &mut rng);
    let legit_timing: Vec<Vec<f64>> = (0..base_env.cells.len())
        .map(|_| frame_timing_series(&ClockModel::gpsdo(), n_frames, &mut rng))
        .collect();

    let n_ues = env.ues.len();
    let mut sim = Sim {
        profile: &profile,
        opts,
        env,
        launched,
        fbs_idx,
        extra_idx,
        rng,
        events: Vec::new(),
        outcomes: Outcomes {
            n_ues,
            ..Outcomes::default()
        },
        hijacked: vec![false; n_ues],
        selected: vec![false; n_ues],
        attempted: vec![false; n_ues],
        served: vec![false; n_ues],
        timing,
        legit_timing,
    };

    let mut t = 0;
    while t < opts.duration_ms {
        sim.broadcast_phase(t);
        sim.ta_phase(t);
        sim.hijack_phase(t);
        sim.application_phase(t);
        t += opts.tick_ms;
    }

    let ue_ids: Vec<String> = sim.env.ues.iter().map(|u| u.ue_id.clone()).collect();
    let (n_sessions, n_exposing) = session_exposure(&sim.events, &ue_ids);
    sim.outcomes.n_sessions = n_sessions;
    sim.outcomes.n_exposing_sessions = n_exposing;
    sim.outcomes.exposing_rate = if n_sessions == 0 {
        0.0
    } else {
        n_exposing as f64 / n_sessions as f64
    };
    sim.outcomes.imsis_caught.sort();
    sim.outcomes.imsis_caught.dedup();

    let trace_text = to_jsonl(&sim.events).expect("trace events serialize");
    let trace_sha256 = {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(trace_text.as_bytes()))
    };
    let manifest = RunManifest {
        profile_name: profile.name.clone(),
        profile_sha256: profile_hash(&profile)?,
        seed: profile.seed,
        trial: opts.trial,
        success_model: opts.success_model,
        duration_ms: opts.duration_ms,
        n_events: sim.events.len(),
        trace_sha256,
    };
    let _ = canonical_yaml(&profile)?;
    Ok(RunOutput {
        events: sim.events,
        outcomes: sim.outcomes,
        manifest,
        resolved_profile: profile,
    })
}

/// A small benign-plus-victims environment: three legitimate cells on
/// distinct frequencies and UEs spread out around them.
pub fn default_environment(n_ues: usize) -> Environment {
    let cells = vec![
        CellProfile {
            params: CellParams {
                pci: 101,
                cell_id: 101,
                earfcn: 1850,
                band: 3,
                ..CellParams::default()
            },
            position: [250.0, 0.0],
            neighbors: vec![205, 310],
            ..CellProfile::default()
        },
        CellProfile {
            params: CellParams {
                pci: 205,
                cell_id: 205,
                earfcn: 3050,
                band: 7,
                tac: 2,
                ..CellParams::default()
            },
            position: [0.0, 400.0],
            neighbors: vec![101, 310],
            ..CellProfile::default()
        },
        CellProfile {
            params: CellParams {
                pci: 310,
                cell_id: 310,
                earfcn: 6300,
                band: 20,
                tac: 3,
                ..CellParams::default()
            },
            position: [-300.0, -150.0],
            neighbors: vec![101, 205],
            ..CellProfile::default()
        },
    ];
    let mut ues = Vec::with_capacity(n_ues);
    for i in 0..n_ues {
        let angle = i as f64 * 2.399963; // golden-angle spread
        let radius = 30.0 + 170.0 * (i as f64 / n_ues.max(1) as f64);
        let mut ue = UeContext::new(
            format!("ue-{i}"),
            format!("00101{:010}", i + 1),
            [radius * angle.cos(), radius * angle.sin()],
        );
        // alternate idle and connected victims so every hijack method has
        // eligible targets
        ue.rrc_state = if i % 2 == 0 {
            RrcState::Idle
        } else {
            RrcState::Connected
        };
        ues.push(ue);
    }
    Environment::new(cells, ues)
}
