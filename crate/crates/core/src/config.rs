//! Adversarial configuration schema, instance enumeration, and YAML profiles.
//!
//! A [`ConfigProfile`] captures one complete fake-base-station instance:
//! launch-phase settings (five binary factors plus manual parameters),
//! the connection hijacking method, and the application-phase behavior.
//! The feasible configuration space factors as
//! `N_total = N_launch (32) x N_hijack (3) x N_app (27) = 2,592`.
//!
//! Profiles serialize to a strict, closed YAML schema. Unknown keys are
//! rejected; omitted keys take documented defaults. Field names are this
//! project's canonicalization of the profile format.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::CellParams;

/// Broadcast-parameter adaptation strategy for the launch phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Adaptation {
    /// Randomized identifiers, no reconnaissance reuse.
    #[default]
    None,
    /// Full parameter alignment with the strongest scanned cell.
    Full,
}

/// Cell parameter scheduling over the broadcast lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CellIteration {
    /// Static cell parameters for the whole run.
    #[default]
    Fixed,
    /// Rotate through PLMN-ARFCN-PCI sets at the dwell interval.
    RoundRobin,
}

/// Connection hijacking mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HijackMethod {
    /// Overwhelm the serving cell co-channel with a large power advantage.
    #[default]
    Jamming,
    /// Pose as a neighbor cell and trigger an A4 measurement report.
    Handover,
    /// Advertise the highest reselection priority to idle UEs.
    CellReselection,
}

/// Victim selection strategy for the application phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Targeting {
    /// Apply the variation to every hijacked UE.
    #[default]
    Arbitrary,
    /// Apply to a seeded Bernoulli fraction of hijacked UEs.
    Adaptive,
    /// Apply only to UEs matching previously acquired identities.
    Targeted,
}

/// The nine application-phase variations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AppVariation {
    /// Identity Request, log the IMSI, then NAS Reject.
    #[default]
    ImsiIdentityRequestReject,
    /// NAS Reject with a cause that forces an IMSI attach; no Identity Request.
    ImsiRejectBased,
    /// Identity Request then RRC Connection Release; no NAS Reject.
    ImsiIdentityRequestRelease,
    /// Periodic IMSI paging; record response presence only.
    LocTrackingCoarse,
    /// Periodic IMSI paging; record the per-response RSRP series.
    LocTrackingFine,
    /// NAS Reject cause #22, suspending network search for 30 minutes.
    Dos,
    /// Steer to the legacy carrier via SIB7 reselection priorities.
    RedirectSib7,
    /// redirectedCarrierInfo in RRC Connection Release.
    RedirectCarrierInfo,
    /// idleModeMobilityControlInfo in RRC Connection Release.
    RedirectIdleModeMobility,
}

impl AppVariation {
    pub const ALL: [AppVariation; 9] = [
        AppVariation::ImsiIdentityRequestReject,
        AppVariation::ImsiRejectBased,
        AppVariation::ImsiIdentityRequestRelease,
        AppVariation::LocTrackingCoarse,
        AppVariation::LocTrackingFine,
        AppVariation::Dos,
        AppVariation::RedirectSib7,
        AppVariation::RedirectCarrierInfo,
        AppVariation::RedirectIdleModeMobility,
    ];

    /// Default NAS reject cause per variation: #9 for reject-based catching
    /// (the only cause effective in single-cell operation), #22 for DoS,
    /// #13 otherwise.
    pub fn default_reject_cause(self) -> u8 {
        match self {
            AppVariation::ImsiRejectBased => 9,
            AppVariation::Dos => 22,
            _ => 13,
        }
    }

    pub fn is_redirect(self) -> bool {
        matches!(
            self,
            AppVariation::RedirectSib7
                | AppVariation::RedirectCarrierInfo
                | AppVariation::RedirectIdleModeMobility
        )
    }

    pub fn is_imsi_catching(self) -> bool {
        matches!(
            self,
            AppVariation::ImsiIdentityRequestReject
                | AppVariation::ImsiRejectBased
                | AppVariation::ImsiIdentityRequestRelease
        )
    }
}

impl fmt::Display for AppVariation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_yaml::to_string(self).map_err(|_| fmt::Error)?;
        write!(f, "{}", s.trim())
    }
}

impl fmt::Display for HijackMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_yaml::to_string(self).map_err(|_| fmt::Error)?;
        write!(f, "{}", s.trim())
    }
}

fn default_tx_power() -> f64 {
    40.0
}

/// Launch-phase settings: the five binary factors (N_launch = 32) plus
/// within-variant knobs that are not enumeration axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaunchConfig {
    /// Broadcast parameter adaptation (V1).
    pub adaptation: Adaptation,
    pub cell_iteration: CellIteration,
    pub paging_reproduction: bool,
    /// TA diversification (V2).
    pub ta_diversification: bool,
    /// Hardware compensation (V7): GPSDO clock plus RF tuning.
    pub hw_compensation: bool,
    pub tx_power_dbm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manual_params: Option<CellParams>,
    /// Concurrent cells, e.g. a 2G carrier for redirection.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub additional_cells: Vec<CellParams>,
}

impl Default for LaunchConfig {
    fn default() -> Self {
        LaunchConfig {
            adaptation: Adaptation::None,
            cell_iteration: CellIteration::Fixed,
            paging_reproduction: false,
            ta_diversification: false,
            hw_compensation: false,
            tx_power_dbm: default_tx_power(),
            manual_params: None,
            additional_cells: Vec::new(),
        }
    }
}

fn default_power_margin() -> f64 {
    30.0
}

/// Hijack-phase settings (N_hijack = 3).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HijackConfig {
    pub method: HijackMethod,
    /// Signal-strength advantage over the victim's serving cell, in dB.
    /// The default of 30 dB makes every method succeed deterministically.
    pub power_margin_db: f64,
}

impl Default for HijackConfig {
    fn default() -> Self {
        HijackConfig {
            method: HijackMethod::Jamming,
            power_margin_db: default_power_margin(),
        }
    }
}

/// Application-phase settings (N_app = 3 targeting x 9 variations = 27).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppConfig {
    pub targeting: Targeting,
    /// Fraction of hijacked UEs targeted under adaptive targeting, in (0, 1].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling_fraction: Option<f64>,
    /// Permanent or temporary identities for targeted operation.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub target_ids: Vec<String>,
    pub variation: AppVariation,
    pub reject_cause: u8,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            targeting: Targeting::Arbitrary,
            sampling_fraction: None,
            target_ids: Vec::new(),
            variation: AppVariation::ImsiIdentityRequestReject,
            reject_cause: AppVariation::ImsiIdentityRequestReject.default_reject_cause(),
        }
    }
}

/// One complete, self-contained FBS instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigProfile {
    pub name: String,
    pub seed: u64,
    pub launch: LaunchConfig,
    pub hijack: HijackConfig,
    pub app: AppConfig,
}

/// Size bookkeeping for the configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigSpace {
    pub n_launch: usize,
    pub n_hijack: usize,
    pub n_app: usize,
    pub n_total: usize,
}

impl ConfigSpace {
    pub fn full() -> Self {
        ConfigSpace::new(32, 3, 27)
    }

    pub fn new(n_launch: usize, n_hijack: usize, n_app: usize) -> Self {
        ConfigSpace {
            n_launch,
            n_hijack,
            n_app,
            n_total: n_launch * n_hijack * n_app,
        }
    }
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Covers both malformed YAML and schema violations; serde_yaml carries
    /// the offending field and location in the message.
    #[error("profile schema error: {0}")]
    Schema(#[from] serde_yaml::Error),
}

/// Placeholder identity used for enumerated `targeted` profiles, standing in
/// for an identity acquired by a prior run.
pub const ENUM_DEFAULT_TARGET_ID: &str = "001010000000001";

const TARGETINGS: [Targeting; 3] = [
    Targeting::Arbitrary,
    Targeting::Adaptive,
    Targeting::Targeted,
];
const HIJACKS: [HijackMethod; 3] = [
    HijackMethod::Jamming,
    HijackMethod::Handover,
    HijackMethod::CellReselection,
];

/// Enumerate all 2,592 feasible instances in a fixed, documented order:
/// the five launch factors vary slowest (adaptation, cell iteration, paging
/// reproduction, TA diversification, hardware compensation), then the hijack
/// method, then targeting, then the application variation (fastest).
///
/// The first yielded profile is the all-defaults profile. Within-variant
/// degrees of freedom (reject cause, sampling fraction, dwell times) are
/// defaulted, not enumerated, so the count stays at 2,592.
pub fn enumerate_instances() -> impl Iterator<Item = ConfigProfile> {
    let mut idx = 0usize;
    let mut out = Vec::with_capacity(2592);
    for adaptation in [Adaptation::None, Adaptation::Full] {
        for cell_iteration in [CellIteration::Fixed, CellIteration::RoundRobin] {
            for paging_reproduction in [false, true] {
                for ta_diversification in [false, true] {
                    for hw_compensation in [false, true] {
                        for method in HIJACKS {
                            for targeting in TARGETINGS {
                                for variation in AppVariation::ALL {
                                    out.push(build_instance(
                                        idx,
                                        adaptation,
                                        cell_iteration,
                                        paging_reproduction,
                                        ta_diversification,
                                        hw_compensation,
                                        method,
                                        targeting,
                                        variation,
                                    ));
                                    idx += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out.into_iter()
}

#[allow(clippy::too_many_arguments)]
fn build_instance(
    idx: usize,
    adaptation: Adaptation,
    cell_iteration: CellIteration,
    paging_reproduction: bool,
    ta_diversification: bool,
    hw_compensation: bool,
    method: HijackMethod,
    targeting: Targeting,
    variation: AppVariation,
) -> ConfigProfile {
    ConfigProfile {
        name: format!("instance-{idx:04}"),
        seed: 0,
        launch: LaunchConfig {
            adaptation,
            cell_iteration,
            paging_reproduction,
            ta_diversification,
            hw_compensation,
            ..LaunchConfig::default()
        },
        hijack: HijackConfig {
            method,
            power_margin_db: default_power_margin(),
        },
        app: AppConfig {
            targeting,
            sampling_fraction: match targeting {
                Targeting::Adaptive => Some(0.1),
                _ => None,
            },
            target_ids: match targeting {
                Targeting::Targeted => vec![ENUM_DEFAULT_TARGET_ID.to_string()],
                _ => Vec::new(),
            },
            variation,
            reject_cause: variation.default_reject_cause(),
        },
    }
}

const REFERENCE_SET_YAML: &str = include_str!("../assets/table5.yaml");

/// The shipped reference instance set: the three hijack methods at their
/// characteristic margins crossed with the IMSI-catching variants.
pub fn reference_instances() -> Vec<ConfigProfile> {
    parse_instance_set(REFERENCE_SET_YAML).expect("built-in instance set is valid")
}

/// Raw YAML of the reference instance set, for shipping alongside outputs.
pub fn reference_instances_yaml() -> &'static str {
    REFERENCE_SET_YAML
}

/// Parse a YAML sequence of profiles.
pub fn parse_instance_set(text: &str) -> Result<Vec<ConfigProfile>, ProfileError> {
    Ok(serde_yaml::from_str(text)?)
}

/// Load a YAML sequence of profiles from a file.
pub fn load_instance_set(path: impl AsRef<Path>) -> Result<Vec<ConfigProfile>, ProfileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance_set(&text)
}

/// Parse a profile from a YAML file. Unknown keys are rejected.
pub fn load_profile(path: impl AsRef<Path>) -> Result<ConfigProfile, ProfileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_profile(&text)
}

pub fn parse_profile(text: &str) -> Result<ConfigProfile, ProfileError> {
    Ok(serde_yaml::from_str(text)?)
}

/// Write canonical YAML: recursively sorted keys, explicit values for every
/// populated field. Stable across runs.
pub fn save_profile(profile: &ConfigProfile, path: impl AsRef<Path>) -> Result<(), ProfileError> {
    let path = path.as_ref();
    std::fs::write(path, canonical_yaml(profile)?).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Canonical serialization: YAML with all mapping keys sorted.
pub fn canonical_yaml(profile: &ConfigProfile) -> Result<String, ProfileError> {
    let value = serde_yaml::to_value(profile)?;
    let sorted = sort_value(value);
    Ok(serde_yaml::to_string(&sorted)?)
}

fn sort_value(value: serde_yaml::Value) -> serde_yaml::Value {
    match value {
        serde_yaml::Value::Mapping(map) => {
            let mut entries: Vec<(String, serde_yaml::Value)> = map
                .into_iter()
                .map(|(k, v)| {
                    let key = k.as_str().unwrap_or_default().to_string();
                    (key, sort_value(v))
                })
                .collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = serde_yaml::Mapping::new();
            for (k, v) in entries {
                out.insert(serde_yaml::Value::String(k), v);
            }
            serde_yaml::Value::Mapping(out)
        }
        serde_yaml::Value::Sequence(seq) => {
            serde_yaml::Value::Sequence(seq.into_iter().map(sort_value).collect())
        }
        other => other,
    }
}

/// SHA-256 of the canonical serialization; the reproducibility anchor used
/// in run manifests.
pub fn profile_hash(profile: &ConfigProfile) -> Result<String, ProfileError> {
    use sha2::{Digest, Sha256};
    let yaml = canonical_yaml(profile)?;
    Ok(hex::encode(Sha256::digest(yaml.as_bytes())))
}
