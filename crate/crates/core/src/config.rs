//! Declarative run configuration.
//!
//! A single JSON document drives generation, training and evaluation.
//! Unknown keys are rejected and `seed` is mandatory. The config hash is the
//! SHA-256 of the canonical serialization (fields in declaration order, all
//! defaults filled in), so two files that differ only in formatting or in
//! spelled-out defaults hash identically.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{ClassifierKind, Normalization, PixelMode, DEFAULT_BIN_WIDTH_DEG, DEFAULT_N, DEFAULT_N_PAR};
use crate::echo::FrequencySweep;
use crate::error::{Error, Result};
use crate::imaging::{ImagingParams, Window};
use crate::polarimetry::{Alignment, Parameter};
use crate::scene::{SensorPose, DEFAULT_RANGE_M};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    pub count: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            center_hz: 1e9,
            bandwidth_hz: 450e6,
            count: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseConfig {
    pub elevation: f64,
    pub azimuth: f64,
}

/// Transmitter placements: elevations 10° and 15°, azimuths 0° to 300° in
/// 60° steps.
pub fn default_transmitters() -> Vec<PoseConfig> {
    [10.0, 15.0]
        .iter()
        .flat_map(|&elevation| {
            (0..6).map(move |i| PoseConfig {
                elevation,
                azimuth: 60.0 * i as f64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverConfig {
    pub poses_per_clip: usize,
    /// Receiver azimuth span covered by one clip, degrees.
    pub aperture_deg: f64,
    /// Largest mean bistatic angle generated, degrees.
    pub max_bistatic_angle: f64,
    /// Uniform jitter applied to transmitter azimuth per clip, ± degrees.
    pub azimuth_jitter_deg: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            poses_per_clip: 128,
            aperture_deg: 60.0,
            max_bistatic_angle: 100.0,
            azimuth_jitter_deg: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImagingConfig {
    pub size: usize,
    pub window: Window,
    /// Fixed pixel spacing in meters; shared by every clip so that pixel
    /// vectors are comparable.
    pub pixel_spacing: f64,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        Self {
            size: 32,
            window: Window::Taper,
            pixel_spacing: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub kind: ClassifierKind,
    pub n: usize,
    pub bin_width: f64,
    pub sigma_floor: Option<f64>,
    pub pixel_mode: PixelMode,
    pub normalization: Normalization,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            kind: ClassifierKind::Pcann,
            n: DEFAULT_N,
            bin_width: DEFAULT_BIN_WIDTH_DEG,
            sigma_floor: None,
            pixel_mode: PixelMode::Magnitude,
            normalization: Normalization::Global,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolarimetryConfig {
    /// Generate all four channels and feature cubes.
    pub enabled: bool,
    pub selected: Vec<Parameter>,
    pub alignment: Alignment,
    /// Replace every scatterer's Sinclair matrix by its symmetric part.
    pub symmetrize_targets: bool,
    pub n_pix: usize,
    pub n_par: usize,
}

impl Default for PolarimetryConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            selected: Parameter::ALL.to_vec(),
            alignment: Alignment::Backscatter,
            symmetrize_targets: false,
            n_pix: DEFAULT_N,
            n_par: DEFAULT_N_PAR,
        }
    }
}

fn default_targets() -> Vec<String> {
    crate::scene::BUILTIN_NAMES.iter().map(|s| s.to_string()).collect()
}

fn default_bins() -> Vec<[f64; 2]> {
    vec![[0.0, 60.0], [60.0, 80.0], [80.0, 100.0]]
}

fn default_clips() -> usize {
    60
}

fn default_range() -> f64 {
    DEFAULT_RANGE_M
}

fn default_train_elevation() -> f64 {
    10.0
}

fn default_test_elevation() -> f64 {
    15.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Builtin target names or paths to target JSON files.
    #[serde(default = "default_targets")]
    pub targets: Vec<String>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_transmitters")]
    pub transmitters: Vec<PoseConfig>,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    #[serde(default = "default_range")]
    pub range_m: f64,
    #[serde(default)]
    pub imaging: ImagingConfig,
    /// Per-sample signal-to-noise ratio in dB; `null` disables noise.
    #[serde(default)]
    pub noise_snr_db: Option<f64>,
    /// Bistatic clips per class and elevation.
    #[serde(default = "default_clips")]
    pub clips_per_class: usize,
    /// Monostatic clips per class and elevation.
    #[serde(default = "default_clips")]
    pub monostatic_clips_per_class: usize,
    pub seed: u64,
    #[serde(default = "default_train_elevation")]
    pub train_elevation: f64,
    #[serde(default = "default_test_elevation")]
    pub test_elevation: f64,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default = "default_bins")]
    pub angle_bins: Vec<[f64; 2]>,
    #[serde(default)]
    pub equal_support: bool,
    #[serde(default)]
    pub polarimetry: PolarimetryConfig,
}

fn bad(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(field, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    /// Defaults everywhere except the mandatory seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            targets: default_targets(),
            sweep: SweepConfig::default(),
            transmitters: default_transmitters(),
            receiver: ReceiverConfig::default(),
            range_m: DEFAULT_RANGE_M,
            imaging: ImagingConfig::default(),
            noise_snr_db: None,
            clips_per_class: default_clips(),
            monostatic_clips_per_class: default_clips(),
            seed,
            train_elevation: default_train_elevation(),
            test_elevation: default_test_elevation(),
            classifier: ClassifierConfig::default(),
            angle_bins: default_bins(),
            equal_support: false,
            polarimetry: PolarimetryConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            bad(
                &format!("line {} column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn frequency_sweep(&self) -> Result<FrequencySweep> {
        FrequencySweep::new(self.sweep.center_hz, self.sweep.bandwidth_hz, self.sweep.count)
    }

    pub fn imaging_params(&self) -> ImagingParams {
        ImagingParams::new(self.imaging.size)
            .with_window(self.imaging.window)
            .with_spacing(self.imaging.pixel_spacing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.len() < 2 {
            return Err(bad("targets", "at least two targets are required"));
        }
        if self.targets.len() > 255 {
            return Err(bad("targets", "at most 255 targets fit the clip class id"));
        }
        positive("sweep.center_hz", self.sweep.center_hz)?;
        positive("sweep.bandwidth_hz", self.sweep.bandwidth_hz)?;
        if self.sweep.count < 2 {
            return Err(bad("sweep.count", "need at least two frequencies"));
        }
        self.frequency_sweep().map_err(|e| bad("sweep", e.to_string()))?;
        if self.transmitters.is_empty() {
            return Err(bad("transmitters", "at least one transmitter position is required"));
        }
        for (i, t) in self.transmitters.iter().enumerate() {
            SensorPose::new(t.elevation, t.azimuth, self.range_m)
                .map_err(|e| bad(&format!("transmitters[{i}]"), e.to_string()))?;
        }
        for (name, el) in [("train_elevation", self.train_elevation), ("test_elevation", self.test_elevation)] {
            if !self.transmitters.iter().any(|t| t.elevation == el) {
                return Err(bad(name, format!("no transmitter at elevation {el}")));
            }
        }
        if self.train_elevation == self.test_elevation {
            return Err(bad("test_elevation", "must differ from train_elevation"));
        }
        if self.receiver.poses_per_clip < 2 {
            return Err(bad("receiver.poses_per_clip", "need at least two poses"));
        }
        positive("receiver.aperture_deg", self.receiver.aperture_deg)?;
        positive("receiver.max_bistatic_angle", self.receiver.max_bistatic_angle)?;
        if self.receiver.max_bistatic_angle >= 180.0 {
            return Err(bad("receiver.max_bistatic_angle", "must be below 180 degrees"));
        }
        if !(self.receiver.azimuth_jitter_deg >= 0.0 && self.receiver.azimuth_jitter_deg.is_finite()) {
            return Err(bad("receiver.azimuth_jitter_deg", "must be nonnegative"));
        }
        positive("range_m", self.range_m)?;
        self.imaging_params()
            .validate()
            .map_err(|e| bad("imaging", e.to_string()))?;
        if let Some(snr) = self.noise_snr_db {
            if !snr.is_finite() {
                return Err(bad("noise_snr_db", "must be finite or null"));
            }
        }
        if self.clips_per_class == 0 {
            return Err(bad("clips_per_class", "must be positive"));
        }
        positive("classifier.bin_width", self.classifier.bin_width)?;
        if self.classifier.n == 0 {
            return Err(bad("classifier.n", "must be positive"));
        }
        if let Some(f) = self.classifier.sigma_floor {
            positive("classifier.sigma_floor", f)?;
        }
        if self.angle_bins.is_empty() {
            return Err(bad("angle_bins", "at least one bin is required"));
        }
        for (i, b) in self.angle_bins.iter().enumerate() {
            if !(b[0] >= 0.0 && b[1] > b[0]) {
                return Err(bad(&format!("angle_bins[{i}]"), "bins need 0 <= low < high"));
            }
            if i > 0 && b[0] < self.angle_bins[i - 1][1] {
                return Err(bad(&format!("angle_bins[{i}]"), "bins must be ordered and disjoint"));
            }
        }
        let sel = &self.polarimetry.selected;
        if sel.is_empty() || sel.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("polarimetry.selected", "need a nonempty list in canonical order without repeats"));
        }
        if self.polarimetry.n_pix == 0 || self.polarimetry.n_par == 0 {
            return Err(bad("polarimetry", "n_pix and n_par must be positive"));
        }
        Ok(())
    }
}
