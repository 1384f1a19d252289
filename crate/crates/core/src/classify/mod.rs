//! Target classifiers: the conditional Gaussian Bayesian classifier (CGBC),
//! the principal-component nearest-neighbour classifier (PCANN) and its
//! multidimensional polarimetric variant, plus SVD scattering-center tools.
//!
//! Every classifier reports a [`Decision`] whose `scores` are "larger is more
//! like this class": the log-likelihood for CGBC and the negated nearest
//! distance for the nearest-neighbour classifiers. Ties resolve to the lowest
//! class index, and classes are indexed in sorted label order.

mod cgbc;
mod mdpca;
mod observation;
mod pcann;
pub mod persist;
mod svd;

pub use cgbc::{cgbc_classify, cgbc_score, cgbc_train, CgbcModel, Template, DEFAULT_BIN_WIDTH_DEG};
pub use mdpca::{md_pcann_classify, md_pcann_train, MdPcannModel, DEFAULT_N_PAR};
pub use observation::{
    build_observation_matrix, clip_vector, Normalization, ObservationMatrix, PixelMode, Preprocessing,
};
pub use pcann::{pcann_classify, pcann_classify_vector, pcann_train, variance_fraction, PcannModel, DEFAULT_N};
pub use svd::{svd_scatter_decompose, two_dim_pca_reduce, ScatterDecomposition};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub class_index: usize,
    pub label: String,
    /// Best score minus the runner-up class score; zero with one class.
    pub margin: f64,
    /// Per-class scores in class-index order.
    pub scores: Vec<f64>,
}

impl Decision {
    pub(crate) fn from_scores(classes: &[String], scores: Vec<f64>) -> Self {
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        let runner_up = scores
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != best)
            .map(|(_, &s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        let margin = if runner_up.is_finite() { scores[best] - runner_up } else { 0.0 };
        Self {
            class_index: best,
            label: classes[best].clone(),
            margin,
            scores,
        }
    }

    /// One-vs-rest score for `class`: its score minus the best other score.
    /// Positive exactly when `class` would win outright.
    pub fn one_vs_rest(&self, class: usize) -> f64 {
        let others = self
            .scores
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != class)
            .map(|(_, &s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        self.scores[class] - others
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Pcann,
    Cgbc,
}

/// Sorted unique labels and the class index of every input label.
pub(crate) fn index_labels<S: AsRef<str>>(labels: &[S]) -> (Vec<String>, Vec<usize>) {
    let mut classes: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
    classes.sort();
    classes.dedup();
    let idx = labels
        .iter()
        .map(|l| classes.binary_search_by(|c| c.as_str().cmp(l.as_ref())).unwrap())
        .collect();
    (classes, idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_ties_pick_lowest_index() {
        let classes = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let d = Decision::from_scores(&classes, vec![-1.0, -1.0, -3.0]);
        assert_eq!(d.class_index, 0);
        assert_eq!(d.margin, 0.0);
        let d = Decision::from_scores(&classes, vec![-3.0, -1.0, -2.5]);
        assert_eq!(d.label, "b");
        assert_eq!(d.margin, 1.5);
        assert_eq!(d.one_vs_rest(1), 1.5);
        assert_eq!(d.one_vs_rest(0), -2.0);
    }

    #[test]
    fn labels_index_in_sorted_order() {
        let (classes, idx) = index_labels(&["z", "a", "z", "m"]);
        assert_eq!(classes, vec!["a", "m", "z"]);
        assert_eq!(idx, vec![2, 0, 2, 1]);
    }
}
