//! Point-scatterer phase history and k-space patch assembly.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{bisector_direction, bistatic_angle, CollectionGeometry, SensorPose, TargetModel, Vec3};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    HH,
    HV,
    VH,
    VV,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::HH, Channel::HV, Channel::VH, Channel::VV];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Channel::HH => "HH",
            Channel::HV => "HV",
            Channel::VH => "VH",
            Channel::VV => "VV",
        };
        f.write_str(s)
    }
}

/// Uniformly spaced transmit frequencies spanning `center ± bandwidth/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencySweep {
    pub center: f64,
    pub bandwidth: f64,
    pub count: usize,
}

impl FrequencySweep {
    pub fn new(center: f64, bandwidth: f64, count: usize) -> Result<Self> {
        let sweep = Self {
            center,
            bandwidth,
            count,
        };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center > 0.0) || !(self.bandwidth > 0.0) {
            return Err(Error::Validation("center and bandwidth must be positive".into()));
        }
        if self.bandwidth >= 2.0 * self.center {
            return Err(Error::Validation(format!(
                "bandwidth {} Hz would reach non-positive frequencies around {} Hz",
                self.bandwidth, self.center
            )));
        }
        if self.count < 2 {
            return Err(Error::Validation("a sweep needs at least 2 frequencies".into()));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let start = self.center - 0.5 * self.bandwidth;
        let step = self.bandwidth / (self.count - 1) as f64;
        (0..self.count).map(|i| start + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSpaceSample {
    /// Ground-plane spatial frequency, rad/m.
    pub kvec: [f64; 2],
    pub value: Complex64,
    pub geometry: CollectionGeometry,
    pub frequency: f64,
    pub channel: Channel,
}

/// Orthonormal ground-plane axes for a patch: `range` points along the
/// mean spatial frequency, `cross` is `range` rotated +90°.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchFrame {
    pub range: [f64; 2],
    pub cross: [f64; 2],
    /// Center of the bounding box in this frame, in ground coordinates.
    pub center: [f64; 2],
    pub range_extent: f64,
    pub cross_extent: f64,
}

impl PatchFrame {
    pub fn to_frame(&self, k: [f64; 2]) -> (f64, f64) {
        let d = [k[0] - self.center[0], k[1] - self.center[1]];
        (
            d[0] * self.range[0] + d[1] * self.range[1],
            d[0] * self.cross[0] + d[1] * self.cross[1],
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSpacePatch {
    pub samples: Vec<KSpaceSample>,
    pub mean_bistatic_angle: f64,
    pub class_label: String,
}

impl KSpacePatch {
    pub fn new(samples: Vec<KSpaceSample>, mean_bistatic_angle: f64, class_label: impl Into<String>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(Error::EmptySupport("patch has no samples".into()));
        };
        if samples.iter().any(|s| s.channel != first.channel) {
            return Err(Error::Validation("patch samples mix polarization channels".into()));
        }
        Ok(Self {
            samples,
            mean_bistatic_angle,
            class_label: class_label.into(),
        })
    }

    pub fn channel(&self) -> Channel {
        self.samples[0].channel
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Range / cross-range frame of the patch and its extents.
    ///
    /// The k-center used for trimming and imaging is the midpoint of the
    /// bounding box in this frame, so a rectangle as large as the extents
    /// always contains every sample.
    pub fn frame(&self) -> PatchFrame {
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().fold([0.0, 0.0], |acc, s| {
            [acc[0] + s.kvec[0] / n, acc[1] + s.kvec[1] / n]
        });
        let norm = (mean[0] * mean[0] + mean[1] * mean[1]).sqrt();
        let range = if norm > 0.0 {
            [mean[0] / norm, mean[1] / norm]
        } else {
            [1.0, 0.0]
        };
        let cross = [-range[1], range[0]];
        let proj = |k: [f64; 2], a: [f64; 2]| k[0] * a[0] + k[1] * a[1];
        let (mut rmin, mut rmax, mut cmin, mut cmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for s in &self.samples {
            let r = proj(s.kvec, range);
            let c = proj(s.kvec, cross);
            rmin = rmin.min(r);
            rmax = rmax.max(r);
            cmin = cmin.min(c);
            cmax = cmax.max(c);
        }
        let rc = 0.5 * (rmin + rmax);
        let cc = 0.5 * (cmin + cmax);
        PatchFrame {
            range,
            cross,
            center: [rc * range[0] + cc * cross[0], rc * range[1] + cc * cross[1]],
            range_extent: rmax - rmin,
            cross_extent: cmax - cmin,
        }
    }

    /// Mean receiver elevation, degrees.
    pub fn rx_elevation(&self) -> f64 {
        self.samples.iter().map(|s| s.geometry.rx.elevation()).sum::<f64>() / self.samples.len() as f64
    }

    /// Circular mean of receiver azimuths, degrees in [0, 360).
    pub fn rx_azimuth_center(&self) -> f64 {
        let (s, c) = self.samples.iter().fold((0.0, 0.0), |(s, c), x| {
            let (sa, ca) = x.geometry.rx.azimuth().to_radians().sin_cos();
            (s + sa, c + ca)
        });
        let az = s.atan2(c).to_degrees().rem_euclid(360.0);
        if az >= 360.0 {
            0.0
        } else {
            az
        }
    }
}

/// `|p - x| - |p|` without cancellation at long range.
fn path_difference(sensor: &Vec3, x: &Vec3) -> f64 {
    let num = x.norm_squared() - 2.0 * sensor.dot(x);
    num / ((sensor - x).norm() + sensor.norm())
}

/// Two-way excess path of every scatterer relative to the scene center.
fn excess_paths(t: &TargetModel, g: &CollectionGeometry) -> Vec<f64> {
    let pt = g.tx.position();
    let pr = g.rx.position();
    t.scatterers
        .iter()
        .map(|s| path_difference(&pt, &s.position) + path_difference(&pr, &s.position))
        .collect()
}

fn sum_returns(t: &TargetModel, paths: &[f64], f: f64, channel: Channel) -> Complex64 {
    let wavenumber = 2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT;
    t.scatterers
        .iter()
        .zip(paths)
        .map(|(s, dr)| s.sinclair.get(channel) * s.amplitude * Complex64::from_polar(1.0, -wavenumber * dr))
        .sum()
}

/// Motion-compensated return of every scatterer at frequency `f`.
pub fn phase_history_sample(t: &TargetModel, g: &CollectionGeometry, f: f64, channel: Channel) -> Complex64 {
    sum_returns(t, &excess_paths(t, g), f, channel)
}

/// Ground-plane spatial frequency `(2πf/c)(u_tx + u_rx)` projected to (x, y).
pub fn ground_kvec(g: &CollectionGeometry, f: f64) -> Result<[f64; 2]> {
    let b = bisector_direction(g)?;
    let scale = 2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT * (g.tx.line_of_sight() + g.rx.line_of_sight()).norm();
    Ok([b.x * scale, b.y * scale])
}

/// Sweeps a fixed transmitter and a moving receiver.
pub fn collect_patch(
    t: &TargetModel,
    tx: SensorPose,
    rx_sweep: &[SensorPose],
    sweep: &FrequencySweep,
    channel: Channel,
) -> Result<KSpacePatch> {
    let geometries: Vec<_> = rx_sweep.iter().map(|&rx| CollectionGeometry::new(tx, rx)).collect();
    collect_patch_geometries(t, &geometries, sweep, channel)
}

/// One sample per (geometry, frequency), geometry-major.
pub fn collect_patch_geometries(
    t: &TargetModel,
    geometries: &[CollectionGeometry],
    sweep: &FrequencySweep,
    channel: Channel,
) -> Result<KSpacePatch> {
    sweep.validate()?;
    if geometries.is_empty() {
        return Err(Error::EmptySupport("no collection geometries".into()));
    }
    let freqs = sweep.frequencies();
    let mut samples = Vec::with_capacity(geometries.len() * freqs.len());
    let mut beta_sum = 0.0;
    for g in geometries {
        beta_sum += bistatic_angle(g);
        let paths = excess_paths(t, g);
        for &f in &freqs {
            samples.push(KSpaceSample {
                kvec: ground_kvec(g, f)?,
                value: sum_returns(t, &paths, f, channel),
                geometry: *g,
                frequency: f,
                channel,
            });
        }
    }
    KSpacePatch::new(samples, beta_sum / geometries.len() as f64, t.name.clone())
}

/// Adds circular complex Gaussian noise at `snr_db` relative to the mean
/// sample power of the patch.
pub fn add_noise(patch: &mut KSpacePatch, snr_db: f64, rng: &mut impl Rng) {
    let power = patch.samples.iter().map(|s| s.value.norm_sqr()).sum::<f64>() / patch.len() as f64;
    add_noise_power(patch, power / 10f64.powf(snr_db / 10.0), rng);
}

/// Adds circular complex Gaussian noise of total power `noise_power` per sample.
pub fn add_noise_power(patch: &mut KSpacePatch, noise_power: f64, rng: &mut impl Rng) {
    let sigma = (noise_power / 2.0).sqrt();
    if !(sigma > 0.0) {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for s in &mut patch.samples {
        s.value += Complex64::new(normal.sample(rng), normal.sample(rng));
    }
}

/// Keeps the samples inside a square of side `reference_extent` (rad/m),
/// centered on the patch k-center and aligned with its range/cross-range frame.
pub fn equalize_support(p: &KSpacePatch, reference_extent: f64) -> Result<KSpacePatch> {
    if !(reference_extent > 0.0) {
        return Err(Error::Validation(format!(
            "reference extent must be positive, got {reference_extent}"
        )));
    }
    let frame = p.frame();
    let half = 0.5 * reference_extent;
    // Samples on the bounding box itself must survive a no-op trim.
    let tol = 1e-9 * reference_extent;
    let kept: Vec<_> = p
        .samples
        .iter()
        .filter(|s| {
            let (r, c) = frame.to_frame(s.kvec);
            r.abs() <= half + tol && c.abs() <= half + tol
        })
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptySupport(format!(
            "no samples within a {reference_extent} rad/m square"
        )));
    }
    KSpacePatch::new(kept, p.mean_bistatic_angle, p.class_label.clone())
}
