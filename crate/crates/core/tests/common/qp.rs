//! Exact dual optimum for tiny SVM problems, and the separable instances used against it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use samn::baselines::{dual_objective, kkt_max_residual};
use samn::numerics::Matrix;

/// Exact dual optimum by enumerating every point's status (0, free, C) and
/// solving the KKT equalities of each assignment. Returns (objective, alphas, b).
pub fn qp_oracle(gram: &Matrix, y: &[f64], c_box: f64) -> (f64, Vec<f64>, f64) {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut status = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 1).collect();
        if !free.is_empty() {
            let k = free.len();
            let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
            let mut rhs = DVector::<f64>::zeros(k + 1);
            let fixed = |j: usize| if status[j] == 2 { c_box } else { 0.0 };
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = y[i] * y[j] * gram.get(i, j);
                }
                a[(r, k)] = y[i];
                let bound: f64 = (0..n)
                    .map(|j| y[i] * y[j] * gram.get(i, j) * fixed(j))
                    .sum();
                rhs[r] = 1.0 - bound;
            }
            for (s, &j) in free.iter().enumerate() {
                a[(k, s)] = y[j];
            }
            rhs[k] = -(0..n).map(|j| y[j] * fixed(j)).sum::<f64>();
            if let Ok(sol) = a.clone().svd(true, true).solve(&rhs, 1e-12) {
                let consistent = (&a * &sol - &rhs).amax() < 1e-9;
                let mut alphas: Vec<f64> = (0..n).map(fixed).collect();
                for (s, &i) in free.iter().enumerate() {
                    alphas[i] = sol[s];
                }
                let b = sol[k];
                let in_box = free
                    .iter()
                    .all(|&i| alphas[i] > -1e-12 && alphas[i] < c_box + 1e-12);
                let kkt = kkt_max_residual(gram, y, &alphas, b, c_box) < 1e-9;
                if consistent && in_box && kkt {
                    let w = dual_objective(gram, y, &alphas);
                    if best.as_ref().is_none_or(|(bw, _, _)| w > *bw) {
                        best = Some((w, alphas, b));
                    }
                }
            }
        }
        // next assignment in base 3
        let mut i = 0;
        loop {
            if i == n {
                return best.expect("some status assignment satisfies the KKT conditions");
            }
            status[i] += 1;
            if status[i] < 3 {
                break;
            }
            status[i] = 0;
            i += 1;
        }
    }
}

/// Two clusters in the plane separated by a margin around a random line.
pub fn separable_instance(seed: u64, n: usize) -> (Matrix, Vec<f64>) {
    let mut r = super::rng(seed);
    let angle: f64 = r.gen_range(0.0..std::f64::consts::TAU);
    let normal = [angle.cos(), angle.sin()];
    let offset: f64 = r.gen_range(-0.5..0.5);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        let along: f64 = r.gen_range(-2.0..2.0);
        let dist: f64 = r.gen_range(0.5..2.0);
        let p = [
            normal[0] * (offset + label * dist) - normal[1] * along,
            normal[1] * (offset + label * dist) + normal[0] * along,
        ];
        rows.push(p);
        y.push(label);
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}
