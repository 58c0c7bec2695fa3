//! Per-UE protocol state machine: idle/connected RRC states, cell
//! reselection, A4 measurement reporting, radio-link failure, and NAS
//! reactions to identity procedures and reject causes.
//!
//! There is no authentication/AKA modeling; an FBS cannot complete it
//! anyway. Blacklists persist for the simulation lifetime.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::HijackMethod;
use crate::radio::{received_power, CellProfile, Environment, Rat};
use crate::trace::{Layer, MsgKind, ProtocolMessage, ReestablishCause, TraceEvent};

/// Duration of the cause-#22 denial-of-service state.
pub const DOS_DURATION_MS: u64 = 30 * 60 * 1000;
/// Default A4 measurement report threshold.
pub const A4_THRESHOLD_DB: f64 = 3.0;
/// Default reselection hysteresis on equal-priority frequencies.
pub const RESELECTION_HYSTERESIS_DB: f64 = 5.0;
/// Co-channel suppression margin that triggers a radio link failure.
pub const RLF_SUPPRESSION_DB: f64 = 20.0;
/// Cells below this are not candidates for camping.
pub const AUDIBILITY_FLOOR_DBM: f64 = -120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RrcState {
    #[default]
    Idle,
    Connected,
}

/// Per-UE protocol state. Owned by the simulation loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeContext {
    pub ue_id: String,
    /// 15-digit permanent identity.
    pub imsi: String,
    pub guti: String,
    pub rrc_state: RrcState,
    /// Index of the serving cell in the environment, if camped/connected.
    pub serving: Option<usize>,
    pub position: [f64; 2],
    pub blacklist_tac: BTreeSet<u16>,
    pub blacklist_plmn: BTreeSet<String>,
    /// While set, the UE refuses all attach attempts until this time.
    pub dos_until_ms: Option<u64>,
    pub pending_reestablish: Option<ReestablishCause>,
    pub identity_exposed: bool,
    /// Whether this device completes a 2G attach after redirection.
    pub legacy_capable: bool,
}

impl UeContext {
    pub fn new(ue_id: impl Into<String>, imsi: impl Into<String>, position: [f64; 2]) -> Self {
        let imsi = imsi.into();
        UeContext {
            ue_id: ue_id.into(),
            guti: format!("guti-{}", &imsi[imsi.len().saturating_sub(6)..]),
            imsi,
            rrc_state: RrcState::Idle,
            serving: None,
            position,
            blacklist_tac: BTreeSet::new(),
            blacklist_plmn: BTreeSet::new(),
            dos_until_ms: None,
            pending_reestablish: None,
            identity_exposed: false,
            legacy_capable: true,
        }
    }

    pub fn in_dos(&self, now_ms: u64) -> bool {
        self.dos_until_ms.is_some_and(|until| now_ms < until)
    }

    pub fn accepts_cell(&self, cell: &CellProfile) -> bool {
        !self.blacklist_tac.contains(&cell.params.tac)
            && !self.blacklist_plmn.contains(&cell.params.plmn)
    }
}

/// Connected-mode measurement report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub cells: Vec<MeasuredCell>,
    pub trigger: MeasurementTrigger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredCell {
    pub pci: u16,
    pub earfcn: u32,
    pub rsrp_dbm: f64,
    pub rsrq_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementTrigger {
    Periodic,
    EventA4,
}

fn audible_candidates<'a>(
    ue: &UeContext,
    env: &'a Environment,
) -> Vec<(usize, &'a CellProfile, f64)> {
    env.cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.params.rat == Rat::Lte)
        .map(|(i, c)| (i, c, received_power(c, ue)))
        .filter(|(_, c, rp)| *rp >= AUDIBILITY_FLOOR_DBM && ue.accepts_cell(c))
        .collect()
}

/// Idle-mode cell reselection. Among audible, non-blacklisted cells, pick
/// the highest-priority frequency whose best cell beats the serving cell:
/// any positive margin suffices on strictly higher priority, the hysteresis
/// applies on equal priority. Ties break by stronger RSRP, then lower PCI.
pub fn reselect(ue: &UeContext, env: &Environment) -> Option<usize> {
    assert_eq!(
        ue.rrc_state,
        RrcState::Idle,
        "reselection is idle-mode only"
    );
    let candidates = audible_candidates(ue, env);
    if candidates.is_empty() {
        return None;
    }
    let serving = ue.serving.and_then(|i| {
        let cell = env.cells.get(i)?;
        if !ue.accepts_cell(cell) {
            return None;
        }
        Some((i, cell, received_power(cell, ue)))
    });

    let Some((serving_idx, serving_cell, serving_rp)) = serving else {
        // nothing to camp on yet: best priority, then rsrp, then pci
        return candidates
            .iter()
            .max_by(|a, b| {
                a.1.params
                    .resel_priority
                    .cmp(&b.1.params.resel_priority)
                    .then(a.2.total_cmp(&b.2))
                    .then(b.1.params.pci.cmp(&a.1.params.pci))
            })
            .map(|(i, _, _)| *i);
    };

    let mut best: Option<(usize, &CellProfile, f64)> = None;
    for (i, cell, rp) in candidates {
        if i == serving_idx {
            continue;
        }
        let qualifies = if cell.params.resel_priority > serving_cell.params.resel_priority {
            rp > serving_rp
        } else if cell.params.resel_priority == serving_cell.params.resel_priority {
            rp > serving_rp + RESELECTION_HYSTERESIS_DB
        } else {
            false
        };
        if !qualifies {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, bc, brp)) => cell
                .params
                .resel_priority
                .cmp(&bc.params.resel_priority)
                .then(rp.total_cmp(&brp))
                .then(bc.params.pci.cmp(&cell.params.pci))
                .is_gt(),
        };
        if better {
            best = Some((i, cell, rp));
        }
    }
    best.map(|(i, _, _)| i).or(Some(serving_idx))
}

/// Emit an A4 measurement report when some cell advertising a neighbor PCI
/// exceeds the serving cell by the threshold.
pub fn maybe_report_a4(
    ue: &UeContext,
    env: &Environment,
    a4_threshold_db: f64,
) -> Option<MeasurementReport> {
    assert_eq!(ue.rrc_state, RrcState::Connected);
    let serving_idx = ue.serving?;
    let serving = &env.cells[serving_idx];
    let serving_rp = received_power(serving, ue);
    let cells: Vec<MeasuredCell> = env
        .cells
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            *i != serving_idx
                && c.params.rat == Rat::Lte
                && serving.neighbors.contains(&c.params.pci)
        })
        .map(|(_, c)| {
            let rp = received_power(c, ue);
            MeasuredCell {
                pci: c.params.pci,
                earfcn: c.params.earfcn,
                rsrp_dbm: rp,
                rsrq_db: rp + 120.0, // coarse proxy; not detection-relevant
            }
        })
        .filter(|m| m.rsrp_dbm > serving_rp + a4_threshold_db)
        .collect();
    if cells.is_empty() {
        None
    } else {
        Some(MeasurementReport {
            cells,
            trigger: MeasurementTrigger::EventA4,
        })
    }
}

/// React to a NAS/RRC message from the cell at `src_cell`. Returns the
/// events the UE emits in response; unknown senders are ignored.
pub fn handle_nas(
    ue: &mut UeContext,
    env: &Environment,
    src_cell: usize,
    msg: &ProtocolMessage,
    now_ms: u64,
) -> Vec<TraceEvent> {
    let Some(cell) = env.cells.get(src_cell) else {
        return Vec::new(); // unknown cell; ignored
    };
    let src = cell_label(src_cell, cell);
    let mut out = Vec::new();
    match msg.kind {
        MsgKind::IdentityRequest => {
            ue.identity_exposed = true;
            let mut resp = ProtocolMessage::new(Layer::Nas, MsgKind::IdentityResponse);
            resp.fields.contains_imsi = true;
            resp.fields.imsi = Some(ue.imsi.clone());
            out.push(TraceEvent::new(now_ms, ue.ue_id.clone(), src, resp));
        }
        MsgKind::NasReject => match msg.fields.reject_cause {
            Some(22) => {
                ue.dos_until_ms = Some(now_ms + DOS_DURATION_MS);
                ue.rrc_state = RrcState::Idle;
            }
            Some(9) => {
                // identity cannot be derived: re-attach exposing the IMSI
                ue.identity_exposed = true;
                let mut attach = ProtocolMessage::new(Layer::Nas, MsgKind::AttachRequest);
                attach.fields.contains_imsi = true;
                attach.fields.imsi = Some(ue.imsi.clone());
                out.push(TraceEvent::new(now_ms, ue.ue_id.clone(), src, attach));
            }
            Some(13) => {
                ue.blacklist_tac.insert(cell.params.tac);
                ue.rrc_state = RrcState::Idle;
                ue.serving = None;
                // rescan toward the best acceptable cell
                if let Some(next) = reselect(ue, env) {
                    ue.serving = Some(next);
                    let attach = ProtocolMessage::new(Layer::Nas, MsgKind::AttachRequest);
                    out.push(TraceEvent::new(
                        now_ms,
                        ue.ue_id.clone(),
                        cell_label(next, &env.cells[next]),
                        attach,
                    ));
                }
            }
            _ => {
                ue.rrc_state = RrcState::Idle;
            }
        },
        MsgKind::RrcRelease => {
            ue.rrc_state = RrcState::Idle;
            if msg.fields.redirect_vector.is_some() {
                if let Some(target) = msg.fields.target_earfcn {
                    if ue.legacy_capable {
                        if let Some((idx, legacy)) =
                            env.cells.iter().enumerate().find(|(_, c)| {
                                c.params.earfcn == target && c.params.rat != Rat::Lte
                            })
                        {
                            ue.serving = Some(idx);
                            let attach = ProtocolMessage::new(Layer::Nas, MsgKind::AttachRequest);
                            out.push(TraceEvent::new(
                                now_ms,
                                ue.ue_id.clone(),
                                cell_label(idx, legacy),
                                attach,
                            ));
                        }
                    }
                }
            }
        }
        _ => {}
    }
    out
}

/// Connected-mode radio-link check: a co-channel cell suppressing the
/// serving cell by >= 20 dB triggers RLF, a failed reestablishment toward
/// the strongest cell, and a fresh connection to it.
pub fn radio_link_check(ue: &mut UeContext, env: &Environment, now_ms: u64) -> Vec<TraceEvent> {
    assert_eq!(ue.rrc_state, RrcState::Connected);
    let Some(serving_idx) = ue.serving else {
        return Vec::new();
    };
    let serving = &env.cells[serving_idx];
    let serving_rp = received_power(serving, ue);
    let jammer = env
        .cells
        .iter()
        .enumerate()
        .filter(|(i, c)| *i != serving_idx && !c.legit && c.params.earfcn == serving.params.earfcn)
        .map(|(i, c)| (i, c, received_power(c, ue)))
        .max_by(|a, b| a.2.total_cmp(&b.2));
    let Some((fbs_idx, fbs, fbs_rp)) = jammer else {
        return Vec::new();
    };
    if fbs_rp - serving_rp < RLF_SUPPRESSION_DB {
        return Vec::new();
    }
    let events = jamming_takeover_flow(now_ms, &ue.ue_id, &cell_label(fbs_idx, fbs));
    ue.serving = Some(fbs_idx);
    ue.rrc_state = RrcState::Connected;
    ue.pending_reestablish = None;
    events
}

pub fn cell_label(idx: usize, cell: &CellProfile) -> String {
    if cell.legit {
        format!("cell-{idx}")
    } else {
        format!("fbs-{idx}")
    }
}

/// Jamming takeover message flow: RLF, reestablishment attempt rejected for
/// missing context, then a fresh connection to the overpowering cell.
pub fn jamming_takeover_flow(t_ms: u64, ue_id: &str, fbs: &str) -> Vec<TraceEvent> {
    let mut reest = ProtocolMessage::new(Layer::Rrc, MsgKind::ReestablishmentRequest);
    reest.fields.reestablish_cause = Some(ReestablishCause::OtherFailure);
    vec![
        TraceEvent::new(
            t_ms,
            ue_id,
            ue_id,
            ProtocolMessage::new(Layer::Rrc, MsgKind::Rlf),
        ),
        TraceEvent::new(t_ms + 1, ue_id, fbs, reest),
        TraceEvent::new(
            t_ms + 2,
            fbs,
            ue_id,
            ProtocolMessage::new(Layer::Rrc, MsgKind::ReestablishmentReject),
        ),
        TraceEvent::new(
            t_ms + 3,
            ue_id,
            fbs,
            ProtocolMessage::new(Layer::Rrc, MsgKind::RrcSetup),
        ),
    ]
}

/// Handover takeover flow: A4 report, network-initiated reconfiguration,
/// handover failure on the context-less target, reestablishment, connection.
pub fn handover_takeover_flow(
    t_ms: u64,
    ue_id: &str,
    serving: &str,
    fbs: &str,
    fbs_pci: u16,
    fbs_rsrp: f64,
) -> Vec<TraceEvent> {
    let mut report = ProtocolMessage::new(Layer::Rrc, MsgKind::MeasurementReport);
    report.fields.pci = Some(fbs_pci);
    let mut reest = ProtocolMessage::new(Layer::Rrc, MsgKind::ReestablishmentRequest);
    reest.fields.reestablish_cause = Some(ReestablishCause::HandoverFailure);
    vec![
        TraceEvent::new(t_ms, ue_id, serving, report).with_phy(crate::trace::PhyInfo {
            rsrp_dbm: Some(fbs_rsrp),
            ..Default::default()
        }),
        TraceEvent::new(
            t_ms + 1,
            serving,
            ue_id,
            ProtocolMessage::new(Layer::Rrc, MsgKind::RrcReconfiguration),
        ),
        TraceEvent::new(
            t_ms + 2,
            ue_id,
            ue_id,
            ProtocolMessage::new(Layer::Rrc, MsgKind::HandoverFailure),
        ),
        TraceEvent::new(t_ms + 3, ue_id, fbs, reest),
        TraceEvent::new(
            t_ms + 4,
            fbs,
            ue_id,
            ProtocolMessage::new(Layer::Rrc, MsgKind::RrcSetup),
        ),
    ]
}

/// Reselection takeover flow: the idle UE simply camps and later connects.
/// No RRC failure events of any kind.
pub fn reselection_takeover_flow(t_ms: u64, ue_id: &str, fbs: &str) -> Vec<TraceEvent> {
    vec![TraceEvent::new(
        t_ms,
        ue_id,
        fbs,
        ProtocolMessage::new(Layer::Rrc, MsgKind::RrcSetup),
    )]
}

/// How hijack success is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SuccessModel {
    /// Success iff the margin exceeds the per-method threshold.
    #[default]
    Deterministic,
    /// Success sampled from the measured success-rate table at the nearest
    /// tabulated margin.
    Stochastic,
}

/// Deterministic margin thresholds per hijack method, in dB.
pub fn hijack_threshold_db(method: HijackMethod) -> f64 {
    match method {
        HijackMethod::Jamming => 20.0,
        HijackMethod::Handover => 3.0,
        HijackMethod::CellReselection => 5.0,
    }
}

/// UE-state requirement per hijack method: jamming works against any state,
/// handover needs a connected victim, reselection an idle one.
pub fn hijack_state_ok(method: HijackMethod, state: RrcState) -> bool {
    match method {
        HijackMethod::Jamming => true,
        HijackMethod::Handover => state == RrcState::Connected,
        HijackMethod::CellReselection => state == RrcState::Idle,
    }
}

/// Tabulated margins of the measured success-rate table.
pub const SUCCESS_TABLE_MARGINS_DB: [f64; 5] = [3.0, 5.0, 10.0, 20.0, 30.0];

/// Measured hijack success rate (percent) at a tabulated margin.
pub fn hijack_success_rate_pct(method: HijackMethod, margin_db: f64) -> f64 {
    let rates = match method {
        HijackMethod::Jamming => [0.0, 0.0, 0.0, 30.0, 100.0],
        HijackMethod::Handover => [20.0, 70.0, 100.0, 100.0, 100.0],
        HijackMethod::CellReselection => [0.0, 20.0, 70.0, 100.0, 100.0],
    };
    // nearest tabulated margin; ties resolve downward
    let mut best = 0usize;
    let mut best_dist = f64::INFINITY;
    for (i, m) in SUCCESS_TABLE_MARGINS_DB.iter().enumerate() {
        let d = (margin_db - m).abs();
        if d < best_dist {
            best_dist = d;
            best = i;
        }
    }
    rates[best]
}

/// Decide one hijack attempt.
pub fn hijack_success(
    method: HijackMethod,
    margin_db: f64,
    state: RrcState,
    model: SuccessModel,
    rng: &mut ChaCha8Rng,
) -> bool {
    if !hijack_state_ok(method, state) {
        return false;
    }
    match model {
        SuccessModel::Deterministic => margin_db > hijack_threshold_db(method),
        SuccessModel::Stochastic => {
            let p = hijack_success_rate_pct(method, margin_db) / 100.0;
            rng.gen_bool(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::{CellParams, CellProfile};

    fn cell(pci: u16, earfcn: u32, prio: u8, tx: f64, pos: [f64; 2], legit: bool) -> CellProfile {
        CellProfile {
            params: CellParams {
                pci,
                earfcn,
                resel_priority: prio,
                cell_id: pci as u32,
                ..CellParams::default()
            },
            tx_power_dbm: tx,
            position: pos,
            legit,
            ..CellProfile::default()
        }
    }

    fn env_with(cells: Vec<CellProfile>, ue: UeContext) -> Environment {
        let mut env = Environment::new(cells, vec![ue]);
        env.ues[0].serving = Some(0);
        env
    }

    #[test]
    fn reselect_to_higher_priority_with_margin() {
        // FBS on a higher-priority earfcn, +5 dB at the UE
        let serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        let mut fbs = cell(77, 3050, 7, 45.0, [10.0, 0.0], false);
        fbs.tx_power_dbm = serving.tx_power_dbm + 5.0;
        let ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        let env = env_with(vec![serving, fbs], ue);
        assert_eq!(reselect(&env.ues[0], &env), Some(1));
    }

    #[test]
    fn no_reselection_below_hysteresis_on_equal_priority() {
        let serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        let mut fbs = cell(77, 3050, 4, 43.0, [10.0, 0.0], false);
        fbs.tx_power_dbm = serving.tx_power_dbm + 3.0;
        let ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        let env = env_with(vec![serving, fbs], ue);
        assert_eq!(reselect(&env.ues[0], &env), Some(0));
    }

    #[test]
    fn singleton_cell_or_blacklisted() {
        let only = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        let ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        let mut env = Environment::new(vec![only], vec![ue]);
        env.ues[0].serving = None;
        assert_eq!(reselect(&env.ues[0], &env), Some(0));
        env.ues[0].blacklist_tac.insert(env.cells[0].params.tac);
        assert_eq!(reselect(&env.ues[0], &env), None);
    }

    // Exhaustive 3-cell scenarios against a brute-force ranking oracle.
    #[test]
    fn reselect_matches_brute_force_oracle_over_three_cells() {
        let prios = [2u8, 4, 6];
        let powers = [34.0f64, 40.0, 46.0];
        let mut checked = 0;
        for p1 in prios {
            for p2 in prios {
                for w0 in powers {
                    for w1 in powers {
                        for w2 in powers {
                            let cells = vec![
                                cell(10, 1000, 4, w0, [10.0, 0.0], true),
                                cell(20, 2000, p1, w1, [10.0, 0.0], true),
                                cell(30, 3000, p2, w2, [10.0, 0.0], true),
                            ];
                            let ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
                            let env = env_with(cells, ue);
                            let got = reselect(&env.ues[0], &env);

                            // oracle: re-rank candidates independently
                            let rp: Vec<f64> = env
                                .cells
                                .iter()
                                .map(|c| received_power(c, &env.ues[0]))
                                .collect();
                            let mut best = 0usize;
                            for i in 1..3 {
                                let (sp, bp) = (
                                    env.cells[best].params.resel_priority,
                                    env.cells[i].params.resel_priority,
                                );
                                let qualifies_vs_serving = if env.cells[i].params.resel_priority
                                    > env.cells[0].params.resel_priority
                                {
                                    rp[i] > rp[0]
                                } else if env.cells[i].params.resel_priority
                                    == env.cells[0].params.resel_priority
                                {
                                    rp[i] > rp[0] + RESELECTION_HYSTERESIS_DB
                                } else {
                                    false
                                };
                                if !qualifies_vs_serving {
                                    continue;
                                }
                                if best == 0 {
                                    best = i;
                                    continue;
                                }
                                if bp > sp
                                    || (bp == sp && rp[i] > rp[best])
                                    || (bp == sp
                                        && rp[i] == rp[best]
                                        && env.cells[i].params.pci < env.cells[best].params.pci)
                                {
                                    best = i;
                                }
                            }
                            assert_eq!(
                                got,
                                Some(best),
                                "prios ({p1},{p2}) powers ({w0},{w1},{w2})"
                            );
                            checked += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(checked, 3 * 3 * 27);
    }

    #[test]
    fn a4_report_fires_at_threshold_on_neighbor_pci() {
        let mut serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        serving.neighbors = vec![205];
        let mut fbs = cell(205, 1850, 4, 43.5, [10.0, 0.0], false);
        fbs.tx_power_dbm = 40.0 + 3.5;
        let mut ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        ue.rrc_state = RrcState::Connected;
        let env = env_with(vec![serving, fbs], ue);
        let report = maybe_report_a4(&env.ues[0], &env, A4_THRESHOLD_DB).unwrap();
        assert_eq!(report.trigger, MeasurementTrigger::EventA4);
        assert!(report.cells.iter().any(|c| c.pci == 205));
    }

    #[test]
    fn a4_silent_below_threshold_or_without_neighbors() {
        let mut serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        serving.neighbors = vec![205];
        let mut fbs = cell(205, 1850, 4, 42.0, [10.0, 0.0], false);
        fbs.tx_power_dbm = 42.0; // +2 dB
        let mut ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        ue.rrc_state = RrcState::Connected;
        let env = env_with(vec![serving.clone(), fbs], ue.clone());
        assert!(maybe_report_a4(&env.ues[0], &env, A4_THRESHOLD_DB).is_none());
        serving.neighbors.clear();
        ue.rrc_state = RrcState::Connected;
        let env = env_with(vec![serving], ue);
        assert!(maybe_report_a4(&env.ues[0], &env, A4_THRESHOLD_DB).is_none());
    }

    #[test]
    fn nas_reject_cause_22_sets_dos_timer() {
        let serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        let ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        let mut env = env_with(vec![serving], ue);
        let mut msg = ProtocolMessage::new(Layer::Nas, MsgKind::NasReject);
        msg.fields.reject_cause = Some(22);
        let mut ue = env.ues.remove(0);
        handle_nas(&mut ue, &env, 0, &msg, 5_000);
        assert_eq!(ue.dos_until_ms, Some(5_000 + 1_800_000));
        assert!(ue.in_dos(5_000 + 1_799_999));
        assert!(!ue.in_dos(5_000 + 1_800_000));
    }

    #[test]
    fn nas_reject_cause_9_reattaches_with_imsi() {
        let serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        let ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        let mut env = env_with(vec![serving], ue);
        let mut msg = ProtocolMessage::new(Layer::Nas, MsgKind::NasReject);
        msg.fields.reject_cause = Some(9);
        let mut ue = env.ues.remove(0);
        let events = handle_nas(&mut ue, &env, 0, &msg, 0);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].msg.kind, MsgKind::AttachRequest);
        assert!(events[0].msg.fields.contains_imsi);
        assert!(ue.identity_exposed);
    }

    #[test]
    fn nas_reject_cause_13_blacklists_tac() {
        let serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        let other = cell(205, 3050, 4, 40.0, [12.0, 0.0], true);
        let tac = serving.params.tac;
        let ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        let mut env = env_with(vec![serving, other], ue);
        env.cells[1].params.tac = 999;
        let mut msg = ProtocolMessage::new(Layer::Nas, MsgKind::NasReject);
        msg.fields.reject_cause = Some(13);
        let mut ue = env.ues.remove(0);
        handle_nas(&mut ue, &env, 0, &msg, 0);
        assert!(ue.blacklist_tac.contains(&tac));
        // rescanned to the non-blacklisted cell
        assert_eq!(ue.serving, Some(1));
    }

    #[test]
    fn message_from_unknown_cell_is_ignored() {
        let serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        let ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        let env = env_with(vec![serving], ue);
        let msg = ProtocolMessage::new(Layer::Nas, MsgKind::IdentityRequest);
        let mut ue = env.ues[0].clone();
        assert!(handle_nas(&mut ue, &env, 99, &msg, 0).is_empty());
        assert!(!ue.identity_exposed);
    }

    #[test]
    fn rlf_flow_at_30db_cochannel() {
        let serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        let mut fbs = cell(77, 1850, 4, 70.0, [10.0, 0.0], false);
        fbs.tx_power_dbm = 70.0; // +30 dB
        let mut ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        ue.rrc_state = RrcState::Connected;
        let mut env = env_with(vec![serving, fbs], ue);
        let mut ue = env.ues.remove(0);
        let events = radio_link_check(&mut ue, &env, 1_000);
        let kinds: Vec<_> = events.iter().map(|e| e.msg.kind).collect();
        assert_eq!(
            kinds,
            vec![
                MsgKind::Rlf,
                MsgKind::ReestablishmentRequest,
                MsgKind::ReestablishmentReject,
                MsgKind::RrcSetup
            ]
        );
        assert_eq!(
            events[1].msg.fields.reestablish_cause,
            Some(ReestablishCause::OtherFailure)
        );
        assert_eq!(ue.serving, Some(1));
    }

    #[test]
    fn no_rlf_at_10db_or_without_fbs() {
        let serving = cell(101, 1850, 4, 40.0, [10.0, 0.0], true);
        let mut fbs = cell(77, 1850, 4, 50.0, [10.0, 0.0], false);
        fbs.tx_power_dbm = 50.0; // +10 dB
        let mut ue = UeContext::new("ue-0", "001010000000001", [0.0, 0.0]);
        ue.rrc_state = RrcState::Connected;
        let env = env_with(vec![serving.clone(), fbs], ue.clone());
        let mut u = env.ues[0].clone();
        assert!(radio_link_check(&mut u, &env, 0).is_empty());

        ue.rrc_state = RrcState::Connected;
        let env = env_with(vec![serving], ue);
        let mut u = env.ues[0].clone();
        assert!(radio_link_check(&mut u, &env, 0).is_empty());
    }

    #[test]
    fn deterministic_thresholds_and_state_requirements() {
        use HijackMethod::*;
        let mut rng = rand::SeedableRng::seed_from_u64(0);
        let cases = [
            (Jamming, 25.0, RrcState::Idle, true),
            (Jamming, 20.0, RrcState::Idle, false),
            (Handover, 4.0, RrcState::Connected, true),
            (Handover, 4.0, RrcState::Idle, false),
            (CellReselection, 6.0, RrcState::Idle, true),
            (CellReselection, 6.0, RrcState::Connected, false),
            (CellReselection, 5.0, RrcState::Idle, false),
        ];
        for (m, margin, state, expect) in cases {
            assert_eq!(
                hijack_success(m, margin, state, SuccessModel::Deterministic, &mut rng),
                expect,
                "{m:?} {margin} {state:?}"
            );
        }
    }

    #[test]
    fn stochastic_rates_follow_table() {
        assert_eq!(hijack_success_rate_pct(HijackMethod::Jamming, 30.0), 100.0);
        assert_eq!(hijack_success_rate_pct(HijackMethod::Jamming, 10.0), 0.0);
        assert_eq!(hijack_success_rate_pct(HijackMethod::Handover, 5.0), 70.0);
        assert_eq!(
            hijack_success_rate_pct(HijackMethod::CellReselection, 11.0),
            70.0
        );
    }
}
