#![allow(dead_code)]

pub mod gradcheck;
pub mod qp;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use samn::dataio::{Batch, Dataset};
use samn::numerics::Matrix;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Adds uniform noise to every parameter so that no relu input sits exactly
/// on the kink (zero biases on a dead layer would put it there).
pub fn jitter<'a>(params: impl IntoIterator<Item = &'a mut Matrix>, seed: u64) {
    let mut r = rng(seed);
    for m in params {
        for v in m.as_mut_slice() {
            *v += r.gen_range(-0.3..0.3);
        }
    }
}

/// Central differences of `f` with respect to every entry of `params[k]`.
pub fn numeric_gradients(
    params: &mut [Matrix],
    mut f: impl FnMut(&[Matrix]) -> f64,
) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(params.len());
    for k in 0..params.len() {
        let mut g = Matrix::zeros(params[k].rows(), params[k].cols());
        for idx in 0..params[k].len() {
            let orig = params[k].as_slice()[idx];
            params[k].as_mut_slice()[idx] = orig + FD_STEP;
            let up = f(params);
            params[k].as_mut_slice()[idx] = orig - FD_STEP;
            let down = f(params);
            params[k].as_mut_slice()[idx] = orig;
            g.as_mut_slice()[idx] = (up - down) / (2.0 * FD_STEP);
        }
        out.push(g);
    }
    out
}

/// `‖a - n‖ / max(‖a‖, ‖n‖)` over all entries; 0 when both vanish.
pub fn relative_error(analytic: &[Matrix], numeric: &[Matrix]) -> f64 {
    let mut diff = 0.0;
    let mut na = 0.0;
    let mut nn = 0.0;
    for (a, n) in analytic.iter().zip(numeric) {
        assert_eq!(a.shape(), n.shape());
        for (x, y) in a.as_slice().iter().zip(n.as_slice()) {
            diff += (x - y) * (x - y);
            na += x * x;
            nn += y * y;
        }
    }
    let scale = na.sqrt().max(nn.sqrt());
    if scale < 1e-12 {
        0.0
    } else {
        diff.sqrt() / scale
    }
}

/// `per_class` Gaussian points around each center, classes interleaved.
pub fn blobs(centers: &[Vec<f64>], per_class: usize, sigma: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let d = centers[0].len();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..per_class {
        for (c, center) in centers.iter().enumerate() {
            data.extend(center.iter().map(|m| m + noise.sample(&mut r)));
            labels.push(c);
        }
    }
    Dataset::from_labels(
        "blobs",
        Matrix::from_vec(labels.len(), d, data).unwrap(),
        labels,
    )
    .unwrap()
}

/// Batch holding every row of `labels`, grouped by class.
pub fn full_batch(labels: &[usize], n_classes: usize) -> Batch {
    let mut groups = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        groups[y].push(i);
    }
    Batch { groups }
}
