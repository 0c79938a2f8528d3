//! Kernel SVM trained by sequential minimal optimization.
//!
//! We solve the dual
//!
//! ```text
//! min_a  ½ aᵀQa - eᵀa   s.t. yᵀa = 0, 0 <= a_i <= C,   Q_ij = y_i y_j k(x_i, x_j)
//! ```
//!
//! with maximal-violating-pair selection for `i` and the second-order gain
//! rule for `j`. The full kernel matrix is cached; there is no shrinking.

use serde::{Deserialize, Serialize};

use crate::numerics::{dot, Matrix};
use crate::{Error, Result};

/// Smallest multiplier for which a sample is kept as a support vector.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn gram(&self, x: &Matrix) -> Matrix {
        let n = x.rows();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval(x.row(i), x.row(j));
                k.set(i, j, v);
                k.set(j, i, v);
            }
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoConfig {
    pub c_box: f64,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl SmoConfig {
    pub fn new(c_box: f64) -> Self {
        SmoConfig {
            c_box,
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// All dual multipliers of a finished SMO run.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// `eᵀa - ½ aᵀQa` at the solution.
    pub objective: f64,
}

pub fn dual_objective(gram: &Matrix, y: &[f64], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * gram.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT violation of `(alphas, bias)` on the training set:
/// `max(0, 1 - y f)` at `a = 0`, `|y f - 1|` for free `a`, `max(0, y f - 1)` at `a = C`.
pub fn kkt_max_residual(gram: &Matrix, y: &[f64], alphas: &[f64], bias: f64, c_box: f64) -> f64 {
    let n = alphas.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n)
            .map(|j| alphas[j] * y[j] * gram.get(i, j))
            .sum::<f64>()
            + bias;
        let margin = y[i] * f;
        let r = if alphas[i] <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if alphas[i] >= c_box {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(r);
    }
    worst
}

fn check_targets(y: &[f64]) -> Result<()> {
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::Config(format!(
            "SVM targets must be +1 or -1, found {bad}"
        )));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::Config("SVM training needs both classes".into()));
    }
    Ok(())
}

/// Solves the dual on a precomputed Gram matrix.
pub fn smo_solve(gram: &Matrix, y: &[f64], config: &SmoConfig) -> Result<DualSolution> {
    check_targets(y)?;
    let n = y.len();
    if gram.shape() != (n, n) {
        return Err(Error::Config(
            "Gram matrix does not match the targets".into(),
        ));
    }
    if !(config.c_box > 0.0) || !(config.tol > 0.0) {
        return Err(Error::Config("C and tol must be positive".into()));
    }
    let c = config.c_box;
    let q = |i: usize, j: usize| y[i] * y[j] * gram.get(i, j);

    let mut alpha = vec![0.0; n];
    // gradient of ½aᵀQa - eᵀa
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= g_max {
                g_max = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut g_min = f64::INFINITY;
        let mut j_sel = None;
        let mut best_gain = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                g_min = g_min.min(v);
                let b = g_max - v;
                if b > 0.0 {
                    let mut a = gram.get(i, i) + gram.get(t, t) - 2.0 * gram.get(i, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let gain = -(b * b) / a;
                    if gain <= best_gain {
                        best_gain = gain;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break;
        };
        if g_max - g_min < config.tol {
            break;
        }
        if iterations >= config.max_iter {
            log::warn!(
                "SMO stopped after {iterations} iterations, gap {}",
                g_max - g_min
            );
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = gram.get(i, i) + gram.get(j, j) - 2.0 * gram.get(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = gram.get(i, i) + gram.get(j, j) - 2.0 * gram.get(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // bias from free multipliers, else the midpoint of the feasible interval
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_sum += yg;
            free_count += 1;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (upper + lower) / 2.0
    };

    let objective = dual_objective(gram, y, &alpha);
    Ok(DualSolution {
        alphas: alpha,
        bias: -rho,
        iterations,
        objective,
    })
}

/// Trained SVM keeping only its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c_box: f64,
    pub support_vectors: Matrix,
    pub alphas: Vec<f64>,
    /// +1 / -1 target of each support vector.
    pub targets: Vec<f64>,
    pub bias: f64,
}

pub fn smo_train(x: &Matrix, y: &[f64], kernel: Kernel, config: &SmoConfig) -> Result<SvmModel> {
    if x.rows() != y.len() {
        return Err(Error::Config(
            "feature rows and targets differ in length".into(),
        ));
    }
    let gram = kernel.gram(x);
    let sol = smo_solve(&gram, y, config)?;
    Ok(SvmModel::from_solution(x, y, kernel, config.c_box, &sol))
}

impl SvmModel {
    pub fn from_solution(
        x: &Matrix,
        y: &[f64],
        kernel: Kernel,
        c_box: f64,
        sol: &DualSolution,
    ) -> Self {
        let keep: Vec<usize> = (0..y.len())
            .filter(|&i| sol.alphas[i] > SUPPORT_THRESHOLD)
            .collect();
        SvmModel {
            kernel,
            c_box,
            support_vectors: x.select_rows(&keep),
            alphas: keep.iter().map(|&i| sol.alphas[i]).collect(),
            targets: keep.iter().map(|&i| y[i]).collect(),
            bias: sol.bias,
        }
    }

    /// `Σ yᵢ αᵢ k(xᵢ, x) + b`: every support vector weighted by its fixed
    /// attention coefficient αᵢ.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.support_vectors.cols() {
            return Err(Error::Numerics(
                crate::numerics::NumericsError::DimensionMismatch {
                    op: "svm_decision",
                    left: (1, x.len()),
                    right: self.support_vectors.shape(),
                },
            ));
        }
        let mut score = self.bias;
        for (i, (&a, &y)) in self.alphas.iter().zip(&self.targets).enumerate() {
            score += y * a * self.kernel.eval(self.support_vectors.row(i), x);
        }
        Ok(score)
    }

    /// Score and sign label (`+1` when the score is non-negative).
    pub fn classify(&self, x: &[f64]) -> Result<(f64, i8)> {
        let s = self.decision(x)?;
        Ok((s, if s >= 0.0 { 1 } else { -1 }))
    }

    /// Primal weight vector `Σ yᵢ αᵢ xᵢ`; only defined for the linear kernel.
    pub fn primal_weights(&self) -> Option<Vec<f64>> {
        if self.kernel != Kernel::Linear {
            return None;
        }
        let mut w = vec![0.0; self.support_vectors.cols()];
        for (i, (&a, &y)) in self.alphas.iter().zip(&self.targets).enumerate() {
            for (wk, xk) in w.iter_mut().zip(self.support_vectors.row(i)) {
                *wk += y * a * xk;
            }
        }
        Some(w)
    }

    pub fn support_count(&self) -> usize {
        self.alphas.len()
    }
}
