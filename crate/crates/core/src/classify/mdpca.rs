use nalgebra::DMatrix;

use super::pcann::principal_basis;
use super::{index_labels, Decision};
use crate::error::{Error, Result};
use crate::polarimetry::{FeatureCube, Parameter};

/// Retained parameter-space components.
pub const DEFAULT_N_PAR: usize = 2;

const SCALE_FLOOR_RATIO: f64 = 1e-12;

/// PCA applied along the pixel dimension and then along the parameter
/// dimension of feature cubes.
#[derive(Debug, Clone, PartialEq)]
pub struct MdPcannModel {
    /// D×n_pix pixel basis.
    pub v_pix: DMatrix<f64>,
    /// P×n_par parameter basis.
    pub v_par: DMatrix<f64>,
    /// One n_pix×n_par matrix per training cube.
    pub reduced_db: Vec<DMatrix<f64>>,
    pub classes: Vec<String>,
    pub labels: Vec<usize>,
    pub selected: Vec<Parameter>,
    /// Mean cube as a D×P matrix.
    pub mean: DMatrix<f64>,
    /// One scale per parameter.
    pub scale: Vec<f64>,
}

fn cube_matrix(cube: &FeatureCube) -> DMatrix<f64> {
    let (n, _, p) = cube.values.dim();
    DMatrix::from_fn(n * n, p, |d, q| cube.values[[d / n, d % n, q]])
}

fn prepared(model: &MdPcannModel, cube: &FeatureCube) -> Result<DMatrix<f64>> {
    if cube.selected != model.selected {
        return Err(Error::ShapeMismatch(format!(
            "cube carries {} parameters in a different selection than the model's {}",
            cube.parameter_count(),
            model.selected.len()
        )));
    }
    let x = cube_matrix(cube);
    if x.nrows() != model.mean.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "cube has {} pixels, model expects {}",
            x.nrows(),
            model.mean.nrows()
        )));
    }
    let mut x = x - &model.mean;
    for (q, s) in model.scale.iter().enumerate() {
        x.column_mut(q).iter_mut().for_each(|v| *v /= s);
    }
    Ok(x)
}

pub fn md_pcann_train(cubes: &[FeatureCube], n_pix: usize, n_par: usize) -> Result<MdPcannModel> {
    let m = cubes.len();
    if m < 2 {
        return Err(Error::TooFewClips(format!("need at least 2 cubes, got {m}")));
    }
    let selected = cubes[0].selected.clone();
    let n = cubes[0].size();
    if let Some(bad) = cubes.iter().position(|c| c.size() != n || c.selected != selected) {
        return Err(Error::ShapeMismatch(format!("cube {bad} differs in size or parameter selection")));
    }
    let p = selected.len();
    if n_par == 0 || n_par > p {
        return Err(Error::RankDeficient(format!(
            "requested {n_par} parameter components from {p} parameters"
        )));
    }
    let raw: Vec<DMatrix<f64>> = cubes.iter().map(cube_matrix).collect();
    let d = n * n;
    let mut mean = DMatrix::zeros(d, p);
    for x in &raw {
        mean += x;
    }
    mean /= m as f64;
    let mut centered: Vec<DMatrix<f64>> = raw.iter().map(|x| x - &mean).collect();
    let mut scale: Vec<f64> = (0..p)
        .map(|q| {
            let ss: f64 = centered.iter().map(|x| x.column(q).norm_squared()).sum();
            (ss / (d * m) as f64).sqrt()
        })
        .collect();
    let floor = (scale.iter().cloned().fold(0.0, f64::max) * SCALE_FLOOR_RATIO).max(f64::MIN_POSITIVE);
    scale.iter_mut().for_each(|s| *s = s.max(floor));
    for x in centered.iter_mut() {
        for (q, s) in scale.iter().enumerate() {
            x.column_mut(q).iter_mut().for_each(|v| *v /= s);
        }
    }

    let averaged = DMatrix::from_fn(d, m, |r, c| centered[c].row(r).sum() / p as f64);
    let (v_pix, _) = principal_basis(&averaged, n_pix)?;

    let projected: Vec<DMatrix<f64>> = centered.iter().map(|x| v_pix.tr_mul(x)).collect();
    let mut par_data = DMatrix::zeros(p, m * n_pix);
    for (i, y) in projected.iter().enumerate() {
        par_data
            .columns_mut(i * n_pix, n_pix)
            .copy_from(&y.transpose());
    }
    let (v_par, _) = principal_basis(&par_data, n_par)?;
    let reduced_db = projected.iter().map(|y| y * &v_par).collect();

    let (classes, labels) = index_labels(&cubes.iter().map(|c| c.meta.class_label.as_str()).collect::<Vec<_>>());
    Ok(MdPcannModel {
        v_pix,
        v_par,
        reduced_db,
        classes,
        labels,
        selected,
        mean,
        scale,
    })
}

impl MdPcannModel {
    /// Values stored per training cube.
    pub fn stored_size(&self) -> usize {
        self.v_pix.ncols() * self.v_par.ncols()
    }

    pub fn reduce(&self, cube: &FeatureCube) -> Result<DMatrix<f64>> {
        let x = prepared(self, cube)?;
        Ok(self.v_pix.tr_mul(&x) * &self.v_par)
    }
}

/// Nearest training cube under the Frobenius distance.
pub fn md_pcann_classify(model: &MdPcannModel, cube: &FeatureCube) -> Result<Decision> {
    let z = model.reduce(cube)?;
    let mut best = vec![f64::INFINITY; model.classes.len()];
    for (db, &class) in model.reduced_db.iter().zip(&model.labels) {
        let dist = (db - &z).norm();
        if dist < best[class] {
            best[class] = dist;
        }
    }
    Ok(Decision::from_scores(&model.classes, best.into_iter().map(|d| -d).collect()))
}
