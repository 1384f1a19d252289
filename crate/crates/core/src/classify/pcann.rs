use nalgebra::{DMatrix, DVector};

use super::{Decision, ObservationMatrix, Preprocessing};
use crate::error::{Error, Result};
use crate::imaging::ImageClip;
use crate::linalg::svd_real;

/// Number of retained principal components.
pub const DEFAULT_N: usize = 20;

/// Singular values below this fraction of the largest count as zero.
pub(crate) const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PcannModel {
    /// D×n basis, columns are the leading eigenvectors of the pixel covariance.
    pub v: DMatrix<f64>,
    /// n×M projected training columns.
    pub reduced_db: DMatrix<f64>,
    pub classes: Vec<String>,
    /// Class index of every training column.
    pub labels: Vec<usize>,
    pub preprocessing: Preprocessing,
    /// All eigenvalues of `XᵀX`, descending.
    pub eigvals: Vec<f64>,
}

/// Leading left singular vectors of `x` and all squared singular values.
pub(crate) fn principal_basis(x: &DMatrix<f64>, n: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let limit = x.nrows().min(x.ncols());
    if n == 0 || n > limit {
        return Err(Error::RankDeficient(format!(
            "requested {n} components from a {}x{} matrix (at most {limit})",
            x.nrows(),
            x.ncols()
        )));
    }
    let svd = svd_real(x)?;
    let s = &svd.s;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let rank = s.iter().filter(|&&v| v > RANK_TOLERANCE * smax).count();
    if n > rank {
        return Err(Error::RankDeficient(format!(
            "requested {n} components but the data has numerical rank {rank}"
        )));
    }
    let v = svd.u.columns(0, n).into_owned();
    Ok((v, s.iter().map(|v| v * v).collect()))
}

pub fn pcann_train(obs: &ObservationMatrix, n: usize) -> Result<PcannModel> {
    let (v, eigvals) = principal_basis(&obs.x, n)?;
    let reduced_db = v.transpose() * &obs.x;
    let (classes, labels) = obs.classes();
    Ok(PcannModel {
        v,
        reduced_db,
        classes,
        labels,
        preprocessing: obs.preprocessing.clone(),
        eigvals,
    })
}

pub fn variance_fraction(model: &PcannModel, n: usize) -> f64 {
    let total: f64 = model.eigvals.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    model.eigvals.iter().take(n).sum::<f64>() / total
}

impl PcannModel {
    pub fn components(&self) -> usize {
        self.v.ncols()
    }

    /// Projection of a preprocessed vector.
    pub fn project(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.v.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "vector has {} entries, model expects {}",
                x.len(),
                self.v.nrows()
            )));
        }
        Ok(self.v.tr_mul(&DVector::from_column_slice(x)))
    }
}

/// Nearest neighbour in the reduced space; scores are negated per-class
/// minimum distances.
pub fn pcann_classify_vector(model: &PcannModel, x: &[f64]) -> Result<Decision> {
    let y = model.project(x)?;
    let mut best = vec![f64::INFINITY; model.classes.len()];
    for (col, &class) in model.labels.iter().enumerate() {
        let d = (model.reduced_db.column(col) - &y).norm();
        if d < best[class] {
            best[class] = d;
        }
    }
    Ok(Decision::from_scores(&model.classes, best.into_iter().map(|d| -d).collect()))
}

pub fn pcann_classify(model: &PcannModel, clip: &ImageClip) -> Result<Decision> {
    let x = model.preprocessing.apply_clip(clip)?;
    pcann_classify_vector(model, &x)
}
