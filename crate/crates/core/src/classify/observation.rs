use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::index_labels;
use crate::error::{Error, Result};
use crate::imaging::ImageClip;

/// Scale entries below this fraction of the largest are floored to it.
const SCALE_FLOOR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PixelMode {
    #[default]
    Magnitude,
    /// Real parts of all pixels followed by imaginary parts.
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Each pixel row scaled to unit population variance.
    #[default]
    PerPixel,
    /// One scale for the whole centered matrix.
    Global,
}

/// Centering and scaling learned from training data and reused at test time.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessing {
    pub mode: PixelMode,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Preprocessing {
    pub fn apply(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.mean.len() {
            return Err(Error::ShapeMismatch(format!(
                "vector has {} entries, model expects {}",
                raw.len(),
                self.mean.len()
            )));
        }
        Ok(raw
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect())
    }

    pub fn apply_clip(&self, clip: &ImageClip) -> Result<Vec<f64>> {
        self.apply(&clip_vector(clip, self.mode))
    }
}

/// Training observations as columns of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    pub x: DMatrix<f64>,
    pub column_labels: Vec<String>,
    pub preprocessing: Preprocessing,
}

impl ObservationMatrix {
    /// Centers and scales raw column vectors.
    pub fn from_columns(
        columns: &[Vec<f64>],
        labels: Vec<String>,
        mode: PixelMode,
        normalization: Normalization,
    ) -> Result<Self> {
        let m = columns.len();
        if m < 2 {
            return Err(Error::TooFewClips(format!("need at least 2 observations, got {m}")));
        }
        if labels.len() != m {
            return Err(Error::ShapeMismatch(format!("{m} observations but {} labels", labels.len())));
        }
        let d = columns[0].len();
        if let Some(bad) = columns.iter().position(|c| c.len() != d) {
            return Err(Error::ShapeMismatch(format!(
                "observation {bad} has {} entries, expected {d}",
                columns[bad].len()
            )));
        }
        let mut x = DMatrix::from_fn(d, m, |r, c| columns[c][r]);
        let mean: Vec<f64> = (0..d).map(|r| x.row(r).sum() / m as f64).collect();
        for (r, mu) in mean.iter().enumerate() {
            for v in x.row_mut(r).iter_mut() {
                *v -= mu;
            }
        }
        let mut scale: Vec<f64> = match normalization {
            Normalization::PerPixel => (0..d)
                .map(|r| (x.row(r).norm_squared() / m as f64).sqrt())
                .collect(),
            Normalization::Global => vec![(x.norm_squared() / (d * m) as f64).sqrt(); d],
        };
        let floor = (scale.iter().cloned().fold(0.0, f64::max) * SCALE_FLOOR_RATIO).max(f64::MIN_POSITIVE);
        for s in scale.iter_mut() {
            *s = s.max(floor);
        }
        for (r, s) in scale.iter().enumerate() {
            for v in x.row_mut(r).iter_mut() {
                *v /= s;
            }
        }
        Ok(Self {
            x,
            column_labels: labels,
            preprocessing: Preprocessing { mode, mean, scale },
        })
    }

    /// Wraps an already prepared matrix with identity preprocessing.
    pub fn from_raw(x: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != x.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "{} columns but {} labels",
                x.ncols(),
                labels.len()
            )));
        }
        let d = x.nrows();
        Ok(Self {
            x,
            column_labels: labels,
            preprocessing: Preprocessing {
                mode: PixelMode::Magnitude,
                mean: vec![0.0; d],
                scale: vec![1.0; d],
            },
        })
    }

    pub fn classes(&self) -> (Vec<String>, Vec<usize>) {
        index_labels(&self.column_labels)
    }
}

/// Stacks a clip's pixels row-major.
pub fn clip_vector(clip: &ImageClip, mode: PixelMode) -> Vec<f64> {
    match mode {
        PixelMode::Magnitude => clip.pixels.iter().map(|z| z.norm()).collect(),
        PixelMode::Complex => clip
            .pixels
            .iter()
            .map(|z| z.re)
            .chain(clip.pixels.iter().map(|z| z.im))
            .collect(),
    }
}

pub fn build_observation_matrix(
    clips: &[ImageClip],
    mode: PixelMode,
    normalization: Normalization,
) -> Result<ObservationMatrix> {
    if clips.len() < 2 {
        return Err(Error::TooFewClips(format!("need at least 2 clips, got {}", clips.len())));
    }
    let n = clips[0].size();
    if let Some(bad) = clips.iter().position(|c| c.size() != n) {
        return Err(Error::ShapeMismatch(format!(
            "clip {bad} is {0}x{0}, expected {n}x{n}",
            clips[bad].size()
        )));
    }
    let columns: Vec<Vec<f64>> = clips.iter().map(|c| clip_vector(c, mode)).collect();
    let labels = clips.iter().map(|c| c.meta.class_label.clone()).collect();
    ObservationMatrix::from_columns(&columns, labels, mode, normalization)
}
