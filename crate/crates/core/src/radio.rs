//! The simulated radio world: cells, received power, scanning, and
//! broadcast-parameter adaptation.
//!
//! There is no fading or interference model. Received power follows a
//! log-distance path loss (L0 = 40 dB at 1 m, exponent 3); everything
//! detection-relevant is expressed as a dB margin between two cells, so the
//! absolute model is not load-bearing.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ue::UeContext;

/// Radio access technology of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Rat {
    #[default]
    Lte,
    G2,
    G3,
}

/// Broadcast identifiers and radio configuration of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellParams {
    /// 5-6 digit operator code.
    pub plmn: String,
    pub tac: u16,
    /// Physical cell identity, 0..=503.
    pub pci: u16,
    /// 28-bit cell identity.
    pub cell_id: u32,
    pub earfcn: u32,
    pub band: u16,
    pub rat: Rat,
    pub bandwidth_mhz: f64,
    /// Cell reselection priority of this cell's frequency, 0..=7.
    pub resel_priority: u8,
}

impl Default for CellParams {
    fn default() -> Self {
        CellParams {
            plmn: "00101".to_string(),
            tac: 1,
            pci: 0,
            cell_id: 1,
            earfcn: 1850,
            band: 3,
            rat: Rat::Lte,
            bandwidth_mhz: 5.0,
            resel_priority: 4,
        }
    }
}

impl CellParams {
    pub const PCI_MAX: u16 = 503;
    pub const CELL_ID_MAX: u32 = (1 << 28) - 1;
    pub const RESEL_PRIORITY_MAX: u8 = 7;

    pub fn valid(&self) -> bool {
        self.pci <= Self::PCI_MAX
            && self.cell_id <= Self::CELL_ID_MAX
            && self.resel_priority <= Self::RESEL_PRIORITY_MAX
            && (self.plmn.len() == 5 || self.plmn.len() == 6)
            && self.plmn.chars().all(|c| c.is_ascii_digit())
    }

    /// Randomized identifiers for unadapted launches. Seeded, reproducible.
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        CellParams {
            plmn: format!("{:03}{:02}", rng.gen_range(200..999), rng.gen_range(0..99)),
            tac: rng.gen(),
            pci: rng.gen_range(0..=Self::PCI_MAX),
            cell_id: rng.gen_range(0..=Self::CELL_ID_MAX),
            earfcn: *[1850u32, 3050, 6300, 9435]
                .get(rng.gen_range(0..4))
                .unwrap(),
            band: *[3u16, 7, 20, 28].get(rng.gen_range(0..4)).unwrap(),
            rat: Rat::Lte,
            bandwidth_mhz: 5.0,
            resel_priority: rng.gen_range(0..=Self::RESEL_PRIORITY_MAX),
        }
    }
}

/// Default 2G carrier appended when a redirection variation needs a legacy
/// cell and none is configured.
pub fn default_legacy_cell() -> CellParams {
    CellParams {
        plmn: "00101".to_string(),
        tac: 1,
        pci: 0,
        cell_id: 2,
        earfcn: 885,
        band: 8,
        rat: Rat::G2,
        bandwidth_mhz: 0.2,
        resel_priority: 0,
    }
}

/// A broadcast cell in the environment, legitimate or hostile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CellProfile {
    pub params: CellParams,
    pub tx_power_dbm: f64,
    pub legit: bool,
    /// Advertised neighbor PCIs.
    pub neighbors: Vec<u16>,
    /// SIB3/SIB5 reselection priorities per EARFCN.
    pub sib_resel_priorities: BTreeMap<u32, u8>,
    /// 2-D position in meters.
    pub position: [f64; 2],
    /// Mean paging inter-arrival broadcast by this cell.
    pub paging_interval_ms: f64,
}

impl Default for CellProfile {
    fn default() -> Self {
        CellProfile {
            params: CellParams::default(),
            tx_power_dbm: 46.0,
            legit: true,
            neighbors: Vec::new(),
            sib_resel_priorities: BTreeMap::new(),
            position: [0.0, 0.0],
            paging_interval_ms: 640.0,
        }
    }
}

/// Summary of the paging pattern observed from one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PagingPattern {
    pub interval_ms: f64,
}

/// One scanned cell with its observed broadcast content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub params: CellParams,
    pub rsrp_dbm: f64,
    pub observed_sibs: BTreeMap<String, String>,
    pub paging_pattern: PagingPattern,
}

/// Reconnaissance output: every audible cell with its broadcast content,
/// persisted as a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ScanDatabase {
    pub entries: Vec<ScanEntry>,
    /// Total simulated scan latency, in milliseconds.
    pub scan_time_ms: u64,
}

impl ScanDatabase {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Strongest entry by RSRP.
    pub fn strongest(&self) -> Option<&ScanEntry> {
        self.entries
            .iter()
            .max_by(|a, b| a.rsrp_dbm.total_cmp(&b.rsrp_dbm))
    }

    /// PCIs of scanned cells, sorted; the neighbor candidate set for
    /// handover-based hijacking.
    pub fn neighbor_pcis(&self) -> Vec<u16> {
        let mut pcis: Vec<u16> = self.entries.iter().map(|e| e.params.pci).collect();
        pcis.sort_unstable();
        pcis.dedup();
        pcis
    }

    pub fn observed_bands(&self) -> Vec<u16> {
        let mut bands: Vec<u16> = self.entries.iter().map(|e| e.params.band).collect();
        bands.sort_unstable();
        bands.dedup();
        bands
    }

    pub fn scanned_tacs(&self) -> Vec<u16> {
        let mut tacs: Vec<u16> = self.entries.iter().map(|e| e.params.tac).collect();
        tacs.sort_unstable();
        tacs.dedup();
        tacs
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&self.entries)
    }
}

/// The simulated world. Single-writer: one simulation loop mutates it.
#[derive(Debug, Clone)]
pub struct Environment {
    pub cells: Vec<CellProfile>,
    pub ues: Vec<UeContext>,
    pub clock_ms: u64,
    pub scanner_position: [f64; 2],
}

impl Environment {
    pub fn new(cells: Vec<CellProfile>, ues: Vec<UeContext>) -> Self {
        let mut env = Environment {
            cells,
            ues,
            clock_ms: 0,
            scanner_position: [0.0, 0.0],
        };
        env.assign_initial_serving();
        env
    }

    /// Camp every UE without a serving cell on its strongest legitimate cell.
    pub fn assign_initial_serving(&mut self) {
        for ue_idx in 0..self.ues.len() {
            if self.ues[ue_idx].serving.is_some() {
                continue;
            }
            let pos = self.ues[ue_idx].position;
            let best = self
                .cells
                .iter()
                .enumerate()
                .filter(|(_, c)| c.legit && c.params.rat == Rat::Lte)
                .max_by(|a, b| received_power_at(a.1, pos).total_cmp(&received_power_at(b.1, pos)))
                .map(|(i, _)| i);
            self.ues[ue_idx].serving = best;
        }
    }

    pub fn advance(&mut self, delta_ms: u64) {
        self.clock_ms += delta_ms;
    }
}

pub const PATHLOSS_L0_DB: f64 = 40.0;
pub const PATHLOSS_EXPONENT: f64 = 3.0;
pub const SCAN_SENSITIVITY_DBM: f64 = -110.0;

fn pathloss_db(distance_m: f64) -> f64 {
    let d = distance_m.max(1.0); // clamp to the 1 m reference distance
    PATHLOSS_L0_DB + 10.0 * PATHLOSS_EXPONENT * d.log10()
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Received power of `cell` at an arbitrary position, in dBm.
pub fn received_power_at(cell: &CellProfile, position: [f64; 2]) -> f64 {
    cell.tx_power_dbm - pathloss_db(distance(cell.position, position))
}

/// Received power of `cell` at the UE, in dBm.
pub fn received_power(cell: &CellProfile, ue: &UeContext) -> f64 {
    received_power_at(cell, ue.position)
}

/// Scan with the default sensitivity floor of -110 dBm.
pub fn scan(env: &Environment, duration_ms: u64, radios: usize) -> ScanDatabase {
    scan_with_sensitivity(env, duration_ms, radios, SCAN_SENSITIVITY_DBM)
}

/// Frequency-hopping scan from the environment's scanner position. Each
/// distinct EARFCN costs one hop of `duration_ms`; `radios` hop in parallel,
/// so total latency is `ceil(n_freq / radios) * duration_ms`.
pub fn scan_with_sensitivity(
    env: &Environment,
    duration_ms: u64,
    radios: usize,
    sensitivity_dbm: f64,
) -> ScanDatabase {
    assert!(duration_ms > 0, "scan duration must be positive");
    assert!(radios >= 1, "need at least one radio");
    let mut entries = Vec::new();
    let mut freqs = Vec::new();
    for cell in &env.cells {
        let rsrp = received_power_at(cell, env.scanner_position);
        if rsrp < sensitivity_dbm {
            continue;
        }
        if !freqs.contains(&cell.params.earfcn) {
            freqs.push(cell.params.earfcn);
        }
        let mut sibs = BTreeMap::new();
        sibs.insert(
            "sib1".to_string(),
            format!(
                "plmn={} tac={} cell_id={}",
                cell.params.plmn, cell.params.tac, cell.params.cell_id
            ),
        );
        sibs.insert(
            "sib3".to_string(),
            format!("resel_priority={}", cell.params.resel_priority),
        );
        sibs.insert(
            "sib5".to_string(),
            cell.sib_resel_priorities
                .iter()
                .map(|(e, p)| format!("{e}:{p}"))
                .collect::<Vec<_>>()
                .join(","),
        );
        entries.push(ScanEntry {
            params: cell.params.clone(),
            rsrp_dbm: rsrp,
            observed_sibs: sibs,
            paging_pattern: PagingPattern {
                interval_ms: cell.paging_interval_ms,
            },
        });
    }
    let hops = freqs.len() as u64;
    let scan_time_ms = hops.div_ceil(radios as u64) * duration_ms;
    ScanDatabase {
        entries,
        scan_time_ms,
    }
}

/// Broadcast-parameter adaptation strategy (V1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdaptationMode {
    /// Seeded random identifiers.
    None,
    /// Clone identifiers, radio configuration, and reselection properties of
    /// the strongest scanned cell.
    Full,
    /// As `Full`, but with the TAC moved outside the scanned TAC set so
    /// victims recover to legitimate networks afterwards.
    UeRecovery,
}

/// Derive the FBS cell parameters from the scan database. `fbs` supplies
/// the non-identifier attributes (power, position).
pub fn apply_adaptation(
    fbs: &CellProfile,
    db: &ScanDatabase,
    mode: AdaptationMode,
    rng: &mut ChaCha8Rng,
) -> CellProfile {
    let mut out = fbs.clone();
    out.legit = false;
    match mode {
        AdaptationMode::None => {
            out.params = CellParams::random(rng);
        }
        AdaptationMode::Full | AdaptationMode::UeRecovery => {
            let strongest = db
                .strongest()
                .expect("adaptation requires a non-empty scan database");
            out.params = strongest.params.clone();
            if mode == AdaptationMode::UeRecovery {
                let scanned = db.scanned_tacs();
                let mut tac = strongest.params.tac.wrapping_add(1);
                while scanned.contains(&tac) {
                    tac = tac.wrapping_add(1);
                }
                out.params.tac = tac;
            }
        }
    }
    out
}
