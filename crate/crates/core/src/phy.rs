//! Physical-layer observables: Timing Advance commands, frame-timing drift,
//! and RF characteristic feature vectors.
//!
//! RF features per source are modeled as independent Gaussians around the
//! measured mean/stddev of that source; the preset table ships as a data
//! file (`assets/rf_presets.yaml`) and is editable without recompilation.
//! Hardware compensation maps to a GPSDO-stabilized clock plus the
//! `rf_manip` preset; uncompensated maps to a 1 ppm commodity clock plus the
//! `fbs_b210` preset.

use std::collections::BTreeMap;

use once_cell::sync::Lazy;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// LTE radio frame period.
pub const FRAME_PERIOD_MS: f64 = 10.0;
/// One TA unit of propagation distance, in meters.
pub const TA_UNIT_M: f64 = 78.0;
/// Maximum TA command value.
pub const TA_MAX: u16 = 1282;
/// Upper bound of the diversified TA range (V2).
pub const TA_DIVERSIFIED_MAX: u16 = 30;
/// Default drift rate of an uncompensated commodity oscillator.
pub const DEFAULT_DRIFT_PPM: f64 = 1.0;

/// How a cell issues Timing Advance commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaMode {
    /// round(distance / 78 m), clamped to [0, 1282]. Legitimate cells.
    DistanceBased,
    /// Low-power FBS coverage: commands of 0 or 1.
    FbsDefault,
    /// Seeded uniform draw over [0, 30] (V2).
    Diversified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaModel {
    pub mode: TaMode,
}

/// One TA command under the given model.
pub fn ta_command(model: &TaModel, distance_m: f64, rng: &mut ChaCha8Rng) -> u16 {
    assert!(distance_m >= 0.0);
    match model.mode {
        TaMode::DistanceBased => {
            let units = (distance_m / TA_UNIT_M).round();
            (units as u64).min(TA_MAX as u64) as u16
        }
        TaMode::FbsDefault => {
            // constrained coverage; propagation delay under one unit
            if distance_m / TA_UNIT_M >= 0.5 {
                1
            } else {
                0
            }
        }
        TaMode::Diversified => rng.gen_range(0..=TA_DIVERSIFIED_MAX),
    }
}

/// Frame-timing clock model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockModel {
    /// GPSDO-disciplined: drift resets each frame, cumulative error stays
    /// sub-microsecond.
    pub compensated: bool,
    pub drift_ppm: f64,
    pub jitter_ns: f64,
}

impl ClockModel {
    pub fn uncompensated() -> Self {
        ClockModel {
            compensated: false,
            drift_ppm: DEFAULT_DRIFT_PPM,
            jitter_ns: 20.0,
        }
    }

    pub fn gpsdo() -> Self {
        ClockModel {
            compensated: true,
            drift_ppm: DEFAULT_DRIFT_PPM,
            jitter_ns: 20.0,
        }
    }
}

/// Cumulative frame-timing error series in nanoseconds, one value per frame.
///
/// Uncompensated: cumulative sum of (drift_ppm x 10 ms) plus Gaussian
/// jitter per frame. Compensated: the drift term resets every frame, so the
/// cumulative value is just that frame's jitter, clamped under 1 us.
pub fn frame_timing_series(model: &ClockModel, n_frames: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    assert!(n_frames >= 1);
    let per_frame_drift_ns = model.drift_ppm * FRAME_PERIOD_MS * 1e6 * 1e-6; // ppm of 10 ms, in ns
    let jitter = if model.jitter_ns > 0.0 {
        Some(Normal::new(0.0, model.jitter_ns).unwrap())
    } else {
        None
    };
    let mut out = Vec::with_capacity(n_frames);
    let mut cumulative = 0.0;
    for _ in 0..n_frames {
        let j = jitter.map(|n| n.sample(rng)).unwrap_or(0.0);
        if model.compensated {
            // discipline loop re-aligns every frame
            out.push(j.clamp(-999.0, 999.0));
        } else {
            cumulative += per_frame_drift_ns + j;
            out.push(cumulative);
        }
    }
    out
}

/// One RF characteristic measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfFeatureVector {
    pub cfo_hz: f64,
    pub sync_error_ns: f64,
    pub mag_error_pct: f64,
}

impl RfFeatureVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.cfo_hz, self.sync_error_ns, self.mag_error_pct]
    }
}

/// Per-source mean/stddev triples for the three RF features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfSourceParams {
    pub cfo_hz_mean: f64,
    pub cfo_hz_std: f64,
    pub sync_error_ns_mean: f64,
    pub sync_error_ns_std: f64,
    pub mag_error_pct_mean: f64,
    pub mag_error_pct_std: f64,
}

impl RfSourceParams {
    pub fn mean_vector(&self) -> RfFeatureVector {
        RfFeatureVector {
            cfo_hz: self.cfo_hz_mean,
            sync_error_ns: self.sync_error_ns_mean,
            mag_error_pct: self.mag_error_pct_mean,
        }
    }
}

/// Independent Gaussian draws per feature.
pub fn rf_features(source: &RfSourceParams, n_windows: usize, seed: u64) -> Vec<RfFeatureVector> {
    assert!(n_windows >= 1);
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rf_features_with(source, n_windows, &mut rng)
}

pub fn rf_features_with(
    source: &RfSourceParams,
    n_windows: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<RfFeatureVector> {
    let cfo = Normal::new(source.cfo_hz_mean, source.cfo_hz_std).unwrap();
    let sync = Normal::new(source.sync_error_ns_mean, source.sync_error_ns_std).unwrap();
    let mag = Normal::new(source.mag_error_pct_mean, source.mag_error_pct_std).unwrap();
    (0..n_windows)
        .map(|_| RfFeatureVector {
            cfo_hz: cfo.sample(rng),
            sync_error_ns: sync.sample(rng),
            mag_error_pct: mag.sample(rng).max(0.0),
        })
        .collect()
}

/// Preset names of the legitimate (operator) sources.
pub const LEGIT_PRESETS: [&str; 6] = [
    "mno1_day1",
    "mno1_day7",
    "mno2_day1",
    "mno2_day7",
    "mno3_day1",
    "mno3_day7",
];

const PRESET_YAML: &str = include_str!("../assets/rf_presets.yaml");

static PRESETS: Lazy<BTreeMap<String, RfSourceParams>> =
    Lazy::new(|| parse_presets(PRESET_YAML).expect("built-in rf preset table is valid"));

pub fn parse_presets(yaml: &str) -> Result<BTreeMap<String, RfSourceParams>, serde_yaml::Error> {
    serde_yaml::from_str(yaml)
}

/// Look up a built-in preset by name.
pub fn preset(name: &str) -> Option<RfSourceParams> {
    PRESETS.get(name).copied()
}

pub fn preset_names() -> Vec<String> {
    PRESETS.keys().cloned().collect()
}
