use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::imaging::ImageClip;
use crate::linalg::svd_complex;

/// Truncated SVD `A ≈ U S Vᴴ` of a clip's pixel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterDecomposition {
    /// N×k left singular vectors.
    pub u: DMatrix<Complex64>,
    /// k singular values, descending.
    pub s: Vec<f64>,
    /// N×k right singular vectors.
    pub v: DMatrix<Complex64>,
}

fn pixel_matrix(clip: &ImageClip) -> DMatrix<Complex64> {
    let n = clip.size();
    DMatrix::from_fn(n, n, |r, c| clip.pixels[[r, c]])
}

pub fn svd_scatter_decompose(clip: &ImageClip, k: usize) -> Result<ScatterDecomposition> {
    let n = clip.size();
    if k == 0 || k > n {
        return Err(Error::Validation(format!("k must lie in 1..={n}, got {k}")));
    }
    let svd = svd_complex(&pixel_matrix(clip))?;
    let u = svd.u.columns(0, k).into_owned();
    let v = svd.v.columns(0, k).into_owned();
    let s = svd.s.iter().take(k).cloned().collect();
    Ok(ScatterDecomposition { u, s, v })
}

/// Two-sided projection `Uᴴ A V`.
pub fn two_dim_pca_reduce(
    clip: &ImageClip,
    u: &DMatrix<Complex64>,
    v: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>> {
    let n = clip.size();
    if u.nrows() != n || v.nrows() != n || u.ncols() != v.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "bases are {}x{} and {}x{} for a {n}x{n} clip",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(u.adjoint() * pixel_matrix(clip) * v)
}
