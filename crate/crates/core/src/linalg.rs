//! Thin singular value decompositions on nalgebra matrices.
//!
//! Backed by faer, which stays accurate on rank-deficient input such as
//! mean-centered observation matrices.

use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// `x = u · diag(s) · vᴴ` with `s` descending and `k = min(rows, cols)`.
#[derive(Debug, Clone)]
pub struct ThinSvd<T: nalgebra::Scalar> {
    pub u: DMatrix<T>,
    pub s: Vec<f64>,
    pub v: DMatrix<T>,
}

fn failed() -> Error {
    Error::RankDeficient("singular value decomposition did not converge".into())
}

pub fn svd_real(x: &DMatrix<f64>) -> Result<ThinSvd<f64>> {
    let m = Mat::<f64>::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)]);
    let svd = m.thin_svd().map_err(|_| failed())?;
    let (u, v) = (svd.U(), svd.V());
    Ok(ThinSvd {
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        s: svd.S().column_vector().iter().copied().collect(),
        v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    })
}

pub fn svd_complex(x: &DMatrix<Complex64>) -> Result<ThinSvd<Complex64>> {
    let m = Mat::<faer::c64>::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)]);
    let svd = m.thin_svd().map_err(|_| failed())?;
    let (u, v) = (svd.U(), svd.V());
    Ok(ThinSvd {
        u: DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        s: svd.S().column_vector().iter().map(|z| z.re).collect(),
        v: DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_rank_deficient_matrix_reconstructs() {
        let mut x = DMatrix::from_fn(40, 6, |r, c| ((r * 7 + c * 13) % 11) as f64 - 5.0 + 0.1 * (r * c) as f64);
        for r in 0..40 {
            let m = x.row(r).mean();
            x.row_mut(r).iter_mut().for_each(|v| *v -= m);
        }
        let d = svd_real(&x).unwrap();
        assert_eq!(d.s.len(), 6);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let back = &d.u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.s.clone())) * d.v.transpose();
        assert!((back - &x).norm() < 1e-12 * x.norm());
        assert!((d.u.tr_mul(&d.u) - DMatrix::identity(6, 6)).norm() < 1e-12);
    }

    #[test]
    fn complex_reconstructs() {
        let x = DMatrix::from_fn(5, 5, |r, c| Complex64::new((r + c) as f64, r as f64 - c as f64 * 0.5));
        let d = svd_complex(&x).unwrap();
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(5, d.s.iter().map(|&v| Complex64::new(v, 0.0))));
        let back = &d.u * s * d.v.adjoint();
        assert!((back - &x).norm() < 1e-12 * x.norm());
    }
}
