use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;

/// Smallest standard deviation kept; constant columns are clamped to it.
pub const MIN_STD: f64 = 1e-8;

/// Per-feature mean and population standard deviation of the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit(train: &Matrix) -> Self {
        assert!(train.rows() > 0, "standardization needs at least one row");
        let n = train.rows() as f64;
        let cols = train.cols();
        let mut mean = vec![0.0; cols];
        for r in 0..train.rows() {
            for (m, v) in mean.iter_mut().zip(train.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; cols];
        for r in 0..train.rows() {
            for ((s, v), m) in var.iter_mut().zip(train.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| (s / n).sqrt().max(MIN_STD))
            .collect();
        StandardizationParams { mean, std }
    }

    /// Fits on the listed rows of `features` only.
    pub fn fit_rows(features: &Matrix, rows: &[usize]) -> Self {
        Self::fit(&features.select_rows(rows))
    }

    pub fn apply(&self, features: &Matrix) -> Matrix {
        assert_eq!(features.cols(), self.mean.len(), "feature count changed");
        let mut out = features.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = if self.std[c] <= MIN_STD {
                    0.0
                } else {
                    (*v - self.mean[c]) / self.std[c]
                };
            }
        }
        out
    }
}
