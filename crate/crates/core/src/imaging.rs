//! SAR clip formation from k-space patches.
//!
//! Samples are binned onto a square grid aligned with the ground x/y axes and
//! centered on the patch k-center, then transformed to the image domain.
//! Image columns run along +x and rows along +y; the scene center sits at
//! pixel `(n/2, n/2)`.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::echo::{Channel, KSpacePatch, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub class_label: String,
    /// `None` for feature cubes built from all four channels.
    pub channel: Option<Channel>,
    pub mean_bistatic_angle: f64,
    pub rx_elevation: f64,
    pub rx_azimuth_center: f64,
}

impl ClipMeta {
    pub fn new(class_label: impl Into<String>, channel: Option<Channel>) -> Self {
        Self {
            class_label: class_label.into(),
            channel,
            mean_bistatic_angle: 0.0,
            rx_elevation: 0.0,
            rx_azimuth_center: 0.0,
        }
    }

    /// Same target and collection, channel ignored.
    pub fn same_geometry(&self, other: &ClipMeta) -> bool {
        self.class_label == other.class_label
            && self.mean_bistatic_angle == other.mean_bistatic_angle
            && self.rx_elevation == other.rx_elevation
            && self.rx_azimuth_center == other.rx_azimuth_center
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageClip {
    pub pixels: Array2<Complex64>,
    pub pixel_spacing: f64,
    pub meta: ClipMeta,
}

impl ImageClip {
    pub fn new(pixels: Array2<Complex64>, pixel_spacing: f64, meta: ClipMeta) -> Result<Self> {
        let (r, c) = pixels.dim();
        if r != c {
            return Err(Error::ShapeMismatch(format!("clip must be square, got {r}x{c}")));
        }
        if r < 8 {
            return Err(Error::Validation(format!("clip size {r} is below 8")));
        }
        if pixels.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("clip has non-finite pixels".into()));
        }
        if !(pixel_spacing > 0.0) {
            return Err(Error::Validation("pixel spacing must be positive".into()));
        }
        Ok(Self {
            pixels,
            pixel_spacing,
            meta,
        })
    }

    pub fn size(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.pixels.mapv(|z| z.norm())
    }

    pub fn energy(&self) -> f64 {
        self.pixels.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `(row, col, |pixel|)` of the brightest pixel; first one wins on ties.
    pub fn peak(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, -1.0);
        for ((r, c), z) in self.pixels.indexed_iter() {
            let m = z.norm();
            if m > best.2 {
                best = (r, c, m);
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    None,
    /// Separable raised-cosine (Hamming) taper across the occupied support.
    Taper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingParams {
    /// Grid size, a power of two in 8..=256.
    pub size: usize,
    pub window: Window,
    /// Fixed output pixel spacing in meters. `None` sizes the grid to the
    /// patch's bounding box.
    pub pixel_spacing: Option<f64>,
}

impl ImagingParams {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            window: Window::None,
            pixel_spacing: None,
        }
    }

    pub fn with_spacing(mut self, spacing: f64) -> Self {
        self.pixel_spacing = Some(spacing);
        self
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.size.is_power_of_two() || !(8..=256).contains(&self.size) {
            return Err(Error::Validation(format!(
                "grid size must be a power of two in 8..=256, got {}",
                self.size
            )));
        }
        if let Some(dx) = self.pixel_spacing {
            if !(dx > 0.0) {
                return Err(Error::Validation("pixel spacing must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Uniform k-space grid ready for transformation.
///
/// Values are gain-normalized: a unit scatterer at the scene center images
/// to a unit peak, so `Σ|image|² = Σ|values|² / n²`.
#[derive(Debug, Clone)]
pub struct KGrid {
    pub values: Array2<Complex64>,
    /// Bin width, rad/m.
    pub dk: f64,
    pub center: [f64; 2],
    pub filled: usize,
}

impl KGrid {
    pub fn pixel_spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.values.nrows() as f64 * self.dk)
    }
}

fn hamming(u: f64) -> f64 {
    0.54 - 0.46 * (2.0 * std::f64::consts::PI * u).cos()
}

/// Nearest-bin resampling with collision averaging; empty bins stay zero.
pub fn resample_to_grid(p: &KSpacePatch, params: &ImagingParams) -> Result<KGrid> {
    params.validate()?;
    if p.is_empty() {
        return Err(Error::EmptySupport("patch is empty".into()));
    }
    let n = params.size;
    let half = (n / 2) as isize;
    let center = p.frame().center;
    let dk = match params.pixel_spacing {
        Some(dx) => 2.0 * std::f64::consts::PI / (n as f64 * dx),
        None => {
            let reach = p
                .samples
                .iter()
                .map(|s| (s.kvec[0] - center[0]).abs().max((s.kvec[1] - center[1]).abs()))
                .fold(0.0, f64::max);
            if reach > 0.0 {
                reach / (half - 1) as f64
            } else {
                1.0
            }
        }
    };

    let mut sums = Array2::<Complex64>::zeros((n, n));
    let mut counts = Array2::<u32>::zeros((n, n));
    for s in &p.samples {
        let col = ((s.kvec[0] - center[0]) / dk).round() as isize + half;
        let row = ((s.kvec[1] - center[1]) / dk).round() as isize + half;
        if (0..n as isize).contains(&row) && (0..n as isize).contains(&col) {
            sums[[row as usize, col as usize]] += s.value;
            counts[[row as usize, col as usize]] += 1;
        }
    }
    let filled = counts.iter().filter(|&&c| c > 0).count();
    if filled == 0 {
        return Err(Error::EmptySupport("no samples fall inside the k-grid".into()));
    }

    let mut weights = Array2::<f64>::zeros((n, n));
    let occupied: Vec<(usize, usize)> = counts
        .indexed_iter()
        .filter(|(_, &c)| c > 0)
        .map(|(ix, _)| ix)
        .collect();
    let (rmin, rmax) = occupied.iter().fold((n, 0), |(lo, hi), &(r, _)| (lo.min(r), hi.max(r)));
    let (cmin, cmax) = occupied.iter().fold((n, 0), |(lo, hi), &(_, c)| (lo.min(c), hi.max(c)));
    let taper = |i: usize, lo: usize, hi: usize| -> f64 {
        match params.window {
            Window::None => 1.0,
            Window::Taper if hi > lo => hamming((i - lo) as f64 / (hi - lo) as f64),
            Window::Taper => 1.0,
        }
    };
    for &(r, c) in &occupied {
        weights[[r, c]] = taper(r, rmin, rmax) * taper(c, cmin, cmax);
    }
    let gain = (n * n) as f64 / weights.sum();

    let mut values = Array2::<Complex64>::zeros((n, n));
    for &(r, c) in &occupied {
        values[[r, c]] = sums[[r, c]] / counts[[r, c]] as f64 * weights[[r, c]] * gain;
    }
    Ok(KGrid {
        values,
        dk,
        center,
        filled,
    })
}

fn roll_half(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    let h = n / 2;
    Array2::from_shape_fn((n, n), |(r, c)| a[[(r + h) % n, (c + h) % n]])
}

/// `I(r, c) = n⁻² Σ G(p, q) exp(-j2π[(p-n/2)(r-n/2) + (q-n/2)(c-n/2)]/n)`.
///
/// The kernel sign matches the `exp(-j k·ΔR)` phase history convention, so a
/// scatterer at `+x` lands right of center.
pub fn image_from_grid(grid: &KGrid) -> Array2<Complex64> {
    let n = grid.values.nrows();
    let mut work = roll_half(&grid.values);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    for mut row in work.rows_mut() {
        let mut buf = row.to_vec();
        fft.process(&mut buf);
        row.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
    }
    for mut col in work.columns_mut() {
        let mut buf = col.to_vec();
        fft.process(&mut buf);
        col.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
    }
    let scale = 1.0 / (n * n) as f64;
    roll_half(&work).mapv(|z| z * scale)
}

pub fn form_clip(p: &KSpacePatch, params: &ImagingParams) -> Result<ImageClip> {
    let grid = resample_to_grid(p, params)?;
    let pixels = image_from_grid(&grid);
    let meta = ClipMeta {
        class_label: p.class_label.clone(),
        channel: Some(p.channel()),
        mean_bistatic_angle: p.mean_bistatic_angle,
        rx_elevation: p.rx_elevation(),
        rx_azimuth_center: p.rx_azimuth_center(),
    };
    ImageClip::new(pixels, grid.pixel_spacing(), meta)
}

/// Resolution is reported as degenerate within this many degrees of 180°.
pub const RESOLUTION_GUARD_DEG: f64 = 1e-3;

/// Ideal resolution `c / (2 B cos(β/2))`, meters.
pub fn theoretical_resolution(bandwidth: f64, beta_deg: f64) -> Result<f64> {
    if !(0.0..180.0 - RESOLUTION_GUARD_DEG).contains(&beta_deg) {
        return Err(Error::DegenerateGeometry(format!(
            "no resolution at bistatic angle {beta_deg}°"
        )));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * bandwidth * (beta_deg.to_radians() / 2.0).cos()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Along a row (ground x).
    Columns,
    /// Along a column (ground y).
    Rows,
}

/// Half-power (-3 dB) width of the main lobe through the brightest pixel,
/// meters. Crossings are linearly interpolated in magnitude.
pub fn mainlobe_width(clip: &ImageClip, axis: Axis) -> f64 {
    let (pr, pc, peak) = clip.peak();
    if peak <= 0.0 {
        return 0.0;
    }
    let cut: Vec<Complex64> = match axis {
        Axis::Columns => clip.pixels.row(pr).to_vec(),
        Axis::Rows => clip.pixels.column(pc).to_vec(),
    };
    let at = match axis {
        Axis::Columns => pc,
        Axis::Rows => pr,
    };
    let profile = upsample(&cut, WIDTH_UPSAMPLING);
    let len = profile.len() as isize;
    let wrap = |i: isize| profile[i.rem_euclid(len) as usize];
    // The interpolated maximum can sit slightly off the pixel peak.
    let guess = (at * WIDTH_UPSAMPLING) as isize;
    let half = WIDTH_UPSAMPLING as isize;
    let top = (guess - half..=guess + half)
        .max_by(|&a, &b| wrap(a).total_cmp(&wrap(b)))
        .unwrap_or(guess);
    let level = wrap(top) * std::f64::consts::FRAC_1_SQRT_2;
    let crossing = |step: isize| -> f64 {
        let mut i = top;
        while (i - top).abs() < len / 2 {
            let j = i + step;
            let (a, b) = (wrap(i), wrap(j));
            if b < level {
                return i as f64 + step as f64 * (a - level) / (a - b);
            }
            i = j;
        }
        i as f64
    };
    (crossing(1) - crossing(-1)) * clip.pixel_spacing / WIDTH_UPSAMPLING as f64
}

const WIDTH_UPSAMPLING: usize = 16;

/// Band-limited interpolation of a periodic cut by zero padding its spectrum;
/// returns magnitudes.
fn upsample(cut: &[Complex64], factor: usize) -> Vec<f64> {
    let n = cut.len();
    let m = n * factor;
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = cut.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let h = n / 2;
    for k in 0..h {
        padded[k] = spec[k];
        padded[m - h + k] = spec[h + k];
    }
    // Split the Nyquist bin so the interpolant stays symmetric.
    padded[h] = spec[h] * 0.5;
    padded[m - h] = spec[h] * 0.5;
    planner.plan_fft_inverse(m).process(&mut padded);
    padded.iter().map(|z| z.norm() / n as f64).collect()
}
