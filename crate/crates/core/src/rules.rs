//! Cross-parameter dependency checker.
//!
//! A configuration that parses is not necessarily operable: parameters
//! constrain each other within a phase and across phases, and some choices
//! additionally require reconnaissance data. The checker encodes these as a
//! fixed registry of 21 rules, applied in ascending id order. `automatic`
//! rules rewrite the profile and report the fix; `strict` rules reject;
//! `prerequisite` rules reject when required prior state (the scan
//! database) is missing.
//!
//! The checker is idempotent: validating an already-resolved profile yields
//! `valid` with no further fixes.

use serde::{Deserialize, Serialize};

use crate::config::{Adaptation, AppVariation, ConfigProfile, HijackMethod, Targeting};
use crate::radio::{default_legacy_cell, CellParams, Rat, ScanDatabase};

/// Where a rule's inputs live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleScope {
    /// All inputs are in one phase's configuration.
    Intra,
    /// Spans phases, or couples the configuration to prior state.
    Inter,
}

/// How a violated rule is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Rewrite the profile to a compliant value.
    Automatic,
    /// Reject; no safe rewrite exists.
    Strict,
    /// Reject; the configuration needs prior state that is absent.
    Prerequisite,
}

/// One registry entry. `reconstructed` marks rules inferred from operational
/// constraints rather than taken from a documented incompatibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub id: u32,
    pub scope: RuleScope,
    pub resolution: Resolution,
    pub summary: &'static str,
    pub reconstructed: bool,
}

/// NAS EMM reject causes the simulator recognizes.
pub const KNOWN_REJECT_CAUSES: [u8; 18] = [
    2, 3, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 22, 25, 35, 40, 42,
];

/// Sampling fraction assigned when adaptive targeting omits one.
pub const DEFAULT_SAMPLING_FRACTION: f64 = 0.1;
/// Maximum concurrent cells one transmitter sustains.
pub const MAX_CONCURRENT_CELLS: usize = 4;

static REGISTRY: [Rule; 21] = [
    Rule {
        id: 1,
        scope: RuleScope::Intra,
        resolution: Resolution::Strict,
        reconstructed: true,
        summary: "transmit power must be a finite dBm value",
    },
    Rule {
        id: 2,
        scope: RuleScope::Intra,
        resolution: Resolution::Strict,
        reconstructed: false,
        summary: "full adaptation and manual cell parameters are mutually exclusive",
    },
    Rule {
        id: 3,
        scope: RuleScope::Intra,
        resolution: Resolution::Automatic,
        reconstructed: true,
        summary: "adaptive targeting without a sampling fraction takes the default",
    },
    Rule {
        id: 4,
        scope: RuleScope::Intra,
        resolution: Resolution::Strict,
        reconstructed: true,
        summary: "sampling fraction must lie in (0, 1]",
    },
    Rule {
        id: 5,
        scope: RuleScope::Intra,
        resolution: Resolution::Automatic,
        reconstructed: true,
        summary: "targeting-specific fields are cleared under other targeting modes",
    },
    Rule {
        id: 6,
        scope: RuleScope::Intra,
        resolution: Resolution::Strict,
        reconstructed: true,
        summary: "manual and additional cell parameters must be in range",
    },
    Rule {
        id: 7,
        scope: RuleScope::Inter,
        resolution: Resolution::Prerequisite,
        reconstructed: true,
        summary: "full adaptation requires a prior scan",
    },
    Rule {
        id: 8,
        scope: RuleScope::Inter,
        resolution: Resolution::Prerequisite,
        reconstructed: true,
        summary: "paging reproduction requires observed paging patterns",
    },
    Rule {
        id: 9,
        scope: RuleScope::Intra,
        resolution: Resolution::Strict,
        reconstructed: true,
        summary: "concurrent cells must have distinct earfcn/pci pairs",
    },
    Rule {
        id: 10,
        scope: RuleScope::Intra,
        resolution: Resolution::Strict,
        reconstructed: true,
        summary: "reject cause must be a recognized NAS EMM cause",
    },
    Rule {
        id: 11,
        scope: RuleScope::Inter,
        resolution: Resolution::Prerequisite,
        reconstructed: false,
        summary: "targeted operation requires previously acquired identities",
    },
    Rule {
        id: 12,
        scope: RuleScope::Inter,
        resolution: Resolution::Automatic,
        reconstructed: true,
        summary: "denial-of-service implies reject cause #22",
    },
    Rule {
        id: 13,
        scope: RuleScope::Inter,
        resolution: Resolution::Automatic,
        reconstructed: true,
        summary: "redirection without a configured target adds the default legacy cell",
    },
    Rule {
        id: 14,
        scope: RuleScope::Inter,
        resolution: Resolution::Strict,
        reconstructed: true,
        summary: "redirection targets must include a non-LTE carrier",
    },
    Rule {
        id: 15,
        scope: RuleScope::Inter,
        resolution: Resolution::Automatic,
        reconstructed: true,
        summary: "jamming needs at least a 20 dB power margin",
    },
    Rule {
        id: 16,
        scope: RuleScope::Inter,
        resolution: Resolution::Automatic,
        reconstructed: true,
        summary: "cell reselection needs at least a 5 dB power margin",
    },
    Rule {
        id: 17,
        scope: RuleScope::Inter,
        resolution: Resolution::Automatic,
        reconstructed: false,
        summary: "handover requires posing as a known neighbor with sufficient margin",
    },
    Rule {
        id: 18,
        scope: RuleScope::Inter,
        resolution: Resolution::Prerequisite,
        reconstructed: true,
        summary: "cell reselection requires scanned frequency priorities",
    },
    Rule {
        id: 19,
        scope: RuleScope::Inter,
        resolution: Resolution::Automatic,
        reconstructed: false,
        summary: "reject-based catching on a single cell forces cause #9",
    },
    Rule {
        id: 20,
        scope: RuleScope::Inter,
        resolution: Resolution::Automatic,
        reconstructed: true,
        summary: "identity-request catching must not use the DoS cause",
    },
    Rule {
        id: 21,
        scope: RuleScope::Intra,
        resolution: Resolution::Strict,
        reconstructed: true,
        summary: "at most four concurrent cells per transmitter",
    },
];

/// The full rule registry, ascending by id.
pub fn list_rules() -> &'static [Rule] {
    &REGISTRY
}

pub fn rule(id: u32) -> &'static Rule {
    REGISTRY
        .iter()
        .find(|r| r.id == id)
        .expect("rule ids are contiguous 1..=21")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// No rule fired.
    Valid,
    /// Automatic fixes applied; the returned profile is operable.
    Resolved,
    /// At least one strict or prerequisite violation.
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RuleOutcome {
    Fix {
        field: String,
        old: String,
        new: String,
    },
    Violation {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleEvent {
    pub rule_id: u32,
    #[serde(flatten)]
    pub outcome: RuleOutcome,
}

/// Checker output: the verdict, every rule firing in application order, and
/// the (possibly rewritten) profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub events: Vec<RuleEvent>,
    pub profile: ConfigProfile,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Rejected
    }

    /// One line per firing, `RULE <id> FIX: <field> <old> -> <new>` or
    /// `RULE <id> VIOLATION: <message>`, then a verdict line.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            match &ev.outcome {
                RuleOutcome::Fix { field, old, new } => {
                    out.push_str(&format!(
                        "RULE {} FIX: {field} {old} -> {new}\n",
                        ev.rule_id
                    ));
                }
                RuleOutcome::Violation { message } => {
                    out.push_str(&format!("RULE {} VIOLATION: {message}\n", ev.rule_id));
                }
            }
        }
        let verdict = match self.verdict {
            Verdict::Valid => "valid",
            Verdict::Resolved => "resolved",
            Verdict::Rejected => "rejected",
        };
        out.push_str(&format!("VERDICT: {verdict}\n"));
        out
    }
}

struct Ctx<'a> {
    profile: ConfigProfile,
    db: &'a ScanDatabase,
    events: Vec<RuleEvent>,
    rejected: bool,
}

impl Ctx<'_> {
    fn fix(&mut self, rule_id: u32, field: &str, old: impl ToString, new: impl ToString) {
        self.events.push(RuleEvent {
            rule_id,
            outcome: RuleOutcome::Fix {
                field: field.to_string(),
                old: old.to_string(),
                new: new.to_string(),
            },
        });
    }

    fn violation(&mut self, rule_id: u32, message: impl Into<String>) {
        self.rejected = true;
        self.events.push(RuleEvent {
            rule_id,
            outcome: RuleOutcome::Violation {
                message: message.into(),
            },
        });
    }
}

fn fmt_cell(p: &CellParams) -> String {
    format!("pci={} earfcn={} band={}", p.pci, p.earfcn, p.band)
}

/// Validate `profile` against the rule registry and the scan database that
/// stands for prior reconnaissance state. Rules apply in ascending id order.
pub fn check(profile: &ConfigProfile, db: &ScanDatabase) -> ValidationReport {
    let mut ctx = Ctx {
        profile: profile.clone(),
        db,
        events: Vec::new(),
        rejected: false,
    };

    // 1: finite tx power
    if !ctx.profile.launch.tx_power_dbm.is_finite() {
        ctx.violation(1, "transmit power is not a finite dBm value");
    }

    // 2: full adaptation vs manual parameters
    if ctx.profile.launch.adaptation == Adaptation::Full
        && ctx.profile.launch.manual_params.is_some()
    {
        ctx.violation(
            2,
            "full broadcast adaptation overrides cell parameters; manual values conflict",
        );
    }

    // 3: adaptive targeting default fraction
    if ctx.profile.app.targeting == Targeting::Adaptive
        && ctx.profile.app.sampling_fraction.is_none()
    {
        ctx.profile.app.sampling_fraction = Some(DEFAULT_SAMPLING_FRACTION);
        ctx.fix(
            3,
            "app.sampling_fraction",
            "none",
            DEFAULT_SAMPLING_FRACTION,
        );
    }

    // 4: fraction bounds
    if let Some(f) = ctx.profile.app.sampling_fraction {
        if !(f > 0.0 && f <= 1.0) {
            ctx.violation(4, format!("sampling fraction {f} outside (0, 1]"));
        }
    }

    // 5: clear mode-specific fields
    if ctx.profile.app.targeting != Targeting::Adaptive
        && ctx.profile.app.sampling_fraction.is_some()
    {
        let old = ctx.profile.app.sampling_fraction.take().unwrap();
        ctx.fix(5, "app.sampling_fraction", old, "none");
    }
    if ctx.profile.app.targeting != Targeting::Targeted && !ctx.profile.app.target_ids.is_empty() {
        let n = ctx.profile.app.target_ids.len();
        ctx.profile.app.target_ids.clear();
        ctx.fix(5, "app.target_ids", format!("{n} ids"), "none");
    }

    // 6: parameter ranges
    let mut all_cells: Vec<&CellParams> = Vec::new();
    if let Some(p) = &ctx.profile.launch.manual_params {
        all_cells.push(p);
    }
    all_cells.extend(ctx.profile.launch.additional_cells.iter());
    let bad: Vec<String> = all_cells
        .iter()
        .filter(|p| !p.valid())
        .map(|p| fmt_cell(p))
        .collect();
    for b in bad {
        ctx.violation(6, format!("cell parameters out of range: {b}"));
    }

    // 7: adaptation needs a scan
    if ctx.profile.launch.adaptation == Adaptation::Full && ctx.db.is_empty() {
        ctx.violation(7, "full adaptation requested without a scan database");
    }

    // 8: paging reproduction needs observed patterns
    if ctx.profile.launch.paging_reproduction && ctx.db.is_empty() {
        ctx.violation(
            8,
            "paging reproduction requested without observed paging patterns",
        );
    }

    // 9: distinct concurrent cells
    {
        let mut seen = std::collections::BTreeSet::new();
        let mut cells: Vec<&CellParams> = Vec::new();
        if let Some(p) = &ctx.profile.launch.manual_params {
            cells.push(p);
        }
        cells.extend(ctx.profile.launch.additional_cells.iter());
        let dupes: Vec<String> = cells
            .iter()
            .filter(|p| !seen.insert((p.earfcn, p.pci)))
            .map(|p| fmt_cell(p))
            .collect();
        for d in dupes {
            ctx.violation(9, format!("duplicate concurrent cell: {d}"));
        }
    }

    // 10: recognized reject cause
    if !KNOWN_REJECT_CAUSES.contains(&ctx.profile.app.reject_cause) {
        let c = ctx.profile.app.reject_cause;
        ctx.violation(10, format!("unrecognized NAS reject cause #{c}"));
    }

    // 11: targeted mode needs identities
    if ctx.profile.app.targeting == Targeting::Targeted && ctx.profile.app.target_ids.is_empty() {
        ctx.violation(
            11,
            "targeted operation requires previously acquired identities",
        );
    }

    // 12: DoS cause
    if ctx.profile.app.variation == AppVariation::Dos && ctx.profile.app.reject_cause != 22 {
        let old = ctx.profile.app.reject_cause;
        ctx.profile.app.reject_cause = 22;
        ctx.fix(12, "app.reject_cause", old, 22);
    }

    // 13: redirection needs a target carrier
    if ctx.profile.app.variation.is_redirect() && ctx.profile.launch.additional_cells.is_empty() {
        let legacy = default_legacy_cell();
        ctx.fix(13, "launch.additional_cells", "none", fmt_cell(&legacy));
        ctx.profile.launch.additional_cells.push(legacy);
    }

    // 14: a redirection target must be non-LTE
    if ctx.profile.app.variation.is_redirect()
        && !ctx.profile.launch.additional_cells.is_empty()
        && !ctx
            .profile
            .launch
            .additional_cells
            .iter()
            .any(|c| c.rat != Rat::Lte)
    {
        ctx.violation(
            14,
            "redirection configured but no non-LTE carrier is present",
        );
    }

    // 15: jamming margin floor
    if ctx.profile.hijack.method == HijackMethod::Jamming
        && ctx.profile.hijack.power_margin_db < 20.0
    {
        let old = ctx.profile.hijack.power_margin_db;
        ctx.profile.hijack.power_margin_db = 20.0;
        ctx.fix(15, "hijack.power_margin_db", old, 20.0);
    }

    // 16: reselection margin floor
    if ctx.profile.hijack.method == HijackMethod::CellReselection
        && ctx.profile.hijack.power_margin_db < 5.0
    {
        let old = ctx.profile.hijack.power_margin_db;
        ctx.profile.hijack.power_margin_db = 5.0;
        ctx.fix(16, "hijack.power_margin_db", old, 5.0);
    }

    // 17: handover neighbor constraints
    if ctx.profile.hijack.method == HijackMethod::Handover {
        resolve_handover_constraints(&mut ctx);
    }

    // 18: reselection needs scanned priorities
    if ctx.profile.hijack.method == HijackMethod::CellReselection && ctx.db.is_empty() {
        ctx.violation(
            18,
            "cell reselection requested without scanned frequency priorities",
        );
    }

    // 19: reject-based catching on a single cell
    if ctx.profile.app.variation == AppVariation::ImsiRejectBased
        && ctx.profile.launch.additional_cells.is_empty()
        && ctx.profile.app.reject_cause != 9
    {
        let old = ctx.profile.app.reject_cause;
        ctx.profile.app.reject_cause = 9;
        ctx.fix(19, "app.reject_cause", old, 9);
    }

    // 20: identity-request catching must not suspend the UE
    if ctx.profile.app.variation == AppVariation::ImsiIdentityRequestReject
        && ctx.profile.app.reject_cause == 22
    {
        ctx.profile.app.reject_cause = 13;
        ctx.fix(20, "app.reject_cause", 22, 13);
    }

    // 21: transmitter cell capacity
    let n_cells = 1 + ctx.profile.launch.additional_cells.len();
    if n_cells > MAX_CONCURRENT_CELLS {
        ctx.violation(
            21,
            format!("{n_cells} concurrent cells exceed the capacity of {MAX_CONCURRENT_CELLS}"),
        );
    }

    let verdict = if ctx.rejected {
        Verdict::Rejected
    } else if ctx.events.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Resolved
    };
    ValidationReport {
        verdict,
        events: ctx.events,
        profile: ctx.profile,
    }
}

/// Rule 17. Handover hijacking only works when the hostile cell is on the
/// victim's neighbor list, so without a scan there is nothing to pose as.
/// Under full adaptation the cloned cell is a scanned neighbor by
/// construction; without adaptation the checker materializes manual
/// parameters cloned from the lowest-PCI scanned cell. The margin floor is
/// the A4 threshold.
fn resolve_handover_constraints(ctx: &mut Ctx<'_>) {
    if ctx.db.is_empty() {
        ctx.violation(
            17,
            "requesting handover without corresponding neighbor cell data",
        );
        return;
    }
    if ctx.profile.launch.adaptation == Adaptation::None {
        let neighbor_pcis = ctx.db.neighbor_pcis();
        let compliant = ctx
            .profile
            .launch
            .manual_params
            .as_ref()
            .is_some_and(|p| neighbor_pcis.contains(&p.pci));
        if !compliant {
            let lowest_pci = neighbor_pcis[0];
            let donor = ctx
                .db
                .entries
                .iter()
                .find(|e| e.params.pci == lowest_pci)
                .expect("pci came from the entries")
                .params
                .clone();
            let old = ctx
                .profile
                .launch
                .manual_params
                .as_ref()
                .map_or("none".to_string(), fmt_cell);
            ctx.fix(17, "launch.manual_params", old, fmt_cell(&donor));
            ctx.profile.launch.manual_params = Some(donor);
        }
    }
    if ctx.profile.hijack.power_margin_db < 3.0 {
        let old = ctx.profile.hijack.power_margin_db;
        ctx.profile.hijack.power_margin_db = 3.0;
        ctx.fix(17, "hijack.power_margin_db", old, 3.0);
    }
}

/// A small reference scan database: the reconnaissance state assumed when
/// validating enumerated instances outside a concrete environment.
pub fn canonical_scan_db() -> ScanDatabase {
    use crate::radio::{scan, CellProfile, Environment};
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
            ..CellProfile::default()
        },
        CellProfile {
            params: CellParams {
                pci: 205,
                cell_id: 205,
                earfcn: 3050,
                band: 7,
                ..CellParams::default()
            },
            position: [0.0, 400.0],
            ..CellProfile::default()
        },
        CellProfile {
            params: CellParams {
                pci: 310,
                cell_id: 310,
                earfcn: 6300,
                band: 20,
                ..CellParams::default()
            },
            position: [-300.0, -150.0],
            ..CellProfile::default()
        },
    ];
    scan(&Environment::new(cells, vec![]), 500, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{enumerate_instances, parse_profile};

    #[test]
    fn registry_counts() {
        let rules = list_rules();
        assert_eq!(rules.len(), 21);
        for (i, r) in rules.iter().enumerate() {
            assert_eq!(r.id as usize, i + 1);
        }
        let intra = rules.iter().filter(|r| r.scope == RuleScope::Intra).count();
        let auto = rules
            .iter()
            .filter(|r| r.resolution == Resolution::Automatic)
            .count();
        let strict = rules
            .iter()
            .filter(|r| r.resolution == Resolution::Strict)
            .count();
        let prereq = rules
            .iter()
            .filter(|r| r.resolution == Resolution::Prerequisite)
            .count();
        assert_eq!(intra, 9);
        assert_eq!(rules.len() - intra, 12);
        assert_eq!((auto, strict, prereq), (9, 8, 4));
        let reconstructed = rules.iter().filter(|r| r.reconstructed).count();
        assert_eq!(reconstructed, 17);
        for id in [2, 11, 17, 19] {
            assert!(
                !rule(id).reconstructed,
                "rule {id} is documented, not inferred"
            );
        }
    }

    #[test]
    fn rule_2_rejects_adaptation_with_manual_params() {
        let p =
            parse_profile("launch:\n  adaptation: full\n  manual_params:\n    pci: 7\n").unwrap();
        let report = check(&p, &canonical_scan_db());
        assert_eq!(report.verdict, Verdict::Rejected);
        assert!(report.events.iter().any(|e| e.rule_id == 2));
        assert!(report.render_text().contains("RULE 2 VIOLATION"));
    }

    #[test]
    fn rule_11_rejects_targeted_without_identities() {
        let p = parse_profile("app:\n  targeting: targeted\n").unwrap();
        let report = check(&p, &canonical_scan_db());
        assert_eq!(report.verdict, Verdict::Rejected);
        assert!(matches!(
            &report.events.iter().find(|e| e.rule_id == 11).unwrap().outcome,
            RuleOutcome::Violation { message } if message.contains("acquired identities")
        ));
    }

    #[test]
    fn rule_17_rejects_handover_without_scan() {
        let p = parse_profile("hijack:\n  method: handover\n").unwrap();
        let report = check(&p, &ScanDatabase::default());
        assert_eq!(report.verdict, Verdict::Rejected);
        let text = report.render_text();
        assert!(
            text.contains("requesting handover without corresponding neighbor cell data"),
            "{text}"
        );
    }

    #[test]
    fn rule_17_materializes_neighbor_params_and_is_idempotent() {
        let p = parse_profile("hijack:\n  method: handover\n  power_margin_db: 1.0\n").unwrap();
        let db = canonical_scan_db();
        let report = check(&p, &db);
        assert_eq!(report.verdict, Verdict::Resolved);
        let fixed = report.profile.launch.manual_params.as_ref().unwrap();
        assert_eq!(fixed.pci, *db.neighbor_pcis().first().unwrap());
        assert!(db.observed_bands().contains(&fixed.band));
        assert_eq!(report.profile.hijack.power_margin_db, 3.0);
        // margin fix is attributed to rule 17, not the other margin rules
        assert!(report.events.iter().all(|e| e.rule_id == 17));

        let again = check(&report.profile, &db);
        assert_eq!(again.verdict, Verdict::Valid);
        assert!(again.events.is_empty());
    }

    #[test]
    fn rule_19_forces_cause_9_single_cell_only() {
        let p =
            parse_profile("app:\n  variation: imsi_reject_based\n  reject_cause: 13\n").unwrap();
        let report = check(&p, &canonical_scan_db());
        assert_eq!(report.profile.app.reject_cause, 9);
        assert!(report
            .render_text()
            .contains("RULE 19 FIX: app.reject_cause 13 -> 9"));

        // with a second cell other causes stay
        let p = parse_profile(
            "launch:\n  additional_cells:\n    - pci: 9\n      earfcn: 885\n      rat: g2\n      band: 8\napp:\n  variation: imsi_reject_based\n  reject_cause: 13\n",
        )
        .unwrap();
        let report = check(&p, &canonical_scan_db());
        assert_eq!(report.profile.app.reject_cause, 13);
        assert_eq!(report.verdict, Verdict::Valid);
    }

    #[test]
    fn margin_floors_and_redirect_defaults() {
        let p = parse_profile("hijack:\n  method: jamming\n  power_margin_db: 10\n").unwrap();
        let report = check(&p, &canonical_scan_db());
        assert_eq!(report.profile.hijack.power_margin_db, 20.0);

        let p = parse_profile(
            "hijack:\n  method: cell_reselection\n  power_margin_db: 2\napp:\n  variation: redirect_sib7\n",
        )
        .unwrap();
        let report = check(&p, &canonical_scan_db());
        assert_eq!(report.profile.hijack.power_margin_db, 5.0);
        assert_eq!(report.profile.launch.additional_cells.len(), 1);
        assert_eq!(report.profile.launch.additional_cells[0].rat, Rat::G2);
    }

    #[test]
    fn strict_rules_reject() {
        let p = parse_profile("app:\n  reject_cause: 99\n").unwrap();
        assert_eq!(check(&p, &canonical_scan_db()).verdict, Verdict::Rejected);

        let p = parse_profile("launch:\n  manual_params:\n    pci: 900\n").unwrap();
        assert_eq!(check(&p, &canonical_scan_db()).verdict, Verdict::Rejected);

        let p = parse_profile("app:\n  targeting: adaptive\n  sampling_fraction: 1.5\n").unwrap();
        assert_eq!(check(&p, &canonical_scan_db()).verdict, Verdict::Rejected);

        let mut p = parse_profile("").unwrap();
        p.launch.tx_power_dbm = f64::NAN;
        assert_eq!(check(&p, &canonical_scan_db()).verdict, Verdict::Rejected);

        let p = parse_profile(
            "launch:\n  additional_cells:\n    - pci: 1\n    - pci: 2\n      earfcn: 300\n    - pci: 3\n      earfcn: 301\n    - pci: 4\n      earfcn: 302\n",
        )
        .unwrap();
        assert_eq!(check(&p, &canonical_scan_db()).verdict, Verdict::Rejected);
    }

    #[test]
    fn all_enumerated_instances_pass_and_are_idempotent() {
        let db = canonical_scan_db();
        for p in enumerate_instances() {
            let report = check(&p, &db);
            assert!(report.passed(), "{}:\n{}", p.name, report.render_text());
            let again = check(&report.profile, &db);
            assert_eq!(again.verdict, Verdict::Valid, "{} not idempotent", p.name);
            assert_eq!(again.profile, report.profile);
        }
    }
}
