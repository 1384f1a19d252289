use std::collections::BTreeMap;

use super::{index_labels, Decision};
use crate::error::{Error, Result};
use crate::imaging::ImageClip;

pub const DEFAULT_BIN_WIDTH_DEG: f64 = 10.0;

/// Default floor relative to the global mean training pixel magnitude.
const SIGMA_FLOOR_RATIO: f64 = 1e-6;

/// Per-pixel Gaussian statistics for one (class, azimuth bin).
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub class_index: usize,
    pub bin: i64,
    pub count: usize,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgbcModel {
    pub classes: Vec<String>,
    /// Sorted by (class, bin).
    pub templates: Vec<Template>,
    pub bin_width: f64,
    pub sigma_floor: f64,
    pub size: usize,
}

fn azimuth_bin(azimuth: f64, bin_width: f64) -> i64 {
    (azimuth.rem_euclid(360.0) / bin_width).floor() as i64
}

/// Builds templates from magnitude clips. Bins holding a single clip carry no
/// variance estimate and are dropped; every class must keep at least one bin.
/// `sigma_floor = None` selects the default relative floor.
pub fn cgbc_train(clips: &[ImageClip], bin_width: f64, sigma_floor: Option<f64>) -> Result<CgbcModel> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Validation(format!("bin width must be positive, got {bin_width}")));
    }
    if clips.is_empty() {
        return Err(Error::TooFewClips("no training clips".into()));
    }
    let n = clips[0].size();
    if let Some(bad) = clips.iter().position(|c| c.size() != n) {
        return Err(Error::ShapeMismatch(format!(
            "clip {bad} is {0}x{0}, expected {n}x{n}",
            clips[bad].size()
        )));
    }
    let (classes, idx) = index_labels(&clips.iter().map(|c| c.meta.class_label.as_str()).collect::<Vec<_>>());
    let mags: Vec<Vec<f64>> = clips.iter().map(|c| c.pixels.iter().map(|z| z.norm()).collect()).collect();
    let floor = match sigma_floor {
        Some(f) if f > 0.0 && f.is_finite() => f,
        Some(f) => return Err(Error::Validation(format!("sigma floor must be positive, got {f}"))),
        None => {
            let total: f64 = mags.iter().flatten().sum();
            let mean = total / (mags.len() * n * n) as f64;
            (SIGMA_FLOOR_RATIO * mean).max(f64::MIN_POSITIVE)
        }
    };

    let mut groups: BTreeMap<(usize, i64), Vec<usize>> = BTreeMap::new();
    for (i, clip) in clips.iter().enumerate() {
        let bin = azimuth_bin(clip.meta.rx_azimuth_center, bin_width);
        groups.entry((idx[i], bin)).or_default().push(i);
    }
    let d = n * n;
    let mut templates = Vec::new();
    for ((class_index, bin), members) in groups {
        if members.len() < 2 {
            continue;
        }
        let count = members.len() as f64;
        let mut mu = vec![0.0; d];
        for &m in &members {
            for (a, v) in mu.iter_mut().zip(&mags[m]) {
                *a += v;
            }
        }
        mu.iter_mut().for_each(|a| *a /= count);
        let mut var = vec![0.0; d];
        for &m in &members {
            for ((a, v), u) in var.iter_mut().zip(&mags[m]).zip(&mu) {
                *a += (v - u) * (v - u);
            }
        }
        let sigma = var.iter().map(|v| (v / count).sqrt().max(floor)).collect();
        templates.push(Template {
            class_index,
            bin,
            count: members.len(),
            mu,
            sigma,
        });
    }
    for (c, name) in classes.iter().enumerate() {
        if !templates.iter().any(|t| t.class_index == c) {
            return Err(Error::TooFewClips(format!(
                "class {name} has no azimuth bin with at least 2 training clips"
            )));
        }
    }
    Ok(CgbcModel {
        classes,
        templates,
        bin_width,
        sigma_floor: floor,
        size: n,
    })
}

/// Gaussian log-likelihood up to constants: `-Σ [ln σ + ((r - μ)/σ)²]`.
pub fn cgbc_score(pixels: &[f64], template: &Template) -> Result<f64> {
    if pixels.len() != template.mu.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} pixels against a {}-pixel template",
            pixels.len(),
            template.mu.len()
        )));
    }
    Ok(-pixels
        .iter()
        .zip(&template.mu)
        .zip(&template.sigma)
        .map(|((r, m), s)| s.ln() + ((r - m) / s).powi(2))
        .sum::<f64>())
}

/// Equal priors: each class scores its best bin.
pub fn cgbc_classify(model: &CgbcModel, clip: &ImageClip) -> Result<Decision> {
    if clip.size() != model.size {
        return Err(Error::ShapeMismatch(format!(
            "clip is {0}x{0}, model expects {1}x{1}",
            clip.size(),
            model.size
        )));
    }
    let r: Vec<f64> = clip.pixels.iter().map(|z| z.norm()).collect();
    let mut best = vec![f64::NEG_INFINITY; model.classes.len()];
    for t in &model.templates {
        let s = cgbc_score(&r, t)?;
        if s > best[t.class_index] {
            best[t.class_index] = s;
        }
    }
    Ok(Decision::from_scores(&model.classes, best))
}
