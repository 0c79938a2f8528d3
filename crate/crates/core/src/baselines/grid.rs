use rayon::prelude::*;

use super::svm::{smo_solve, Kernel, SmoConfig};
use crate::dataio::stratified_folds;
use crate::numerics::Matrix;
use crate::{Error, Result};

/// `2^lo, 2^(lo+step), ..., 2^hi`.
pub fn power_grid(lo: i32, hi: i32, step: usize) -> Vec<f64> {
    (lo..=hi).step_by(step).map(|e| 2f64.powi(e)).collect()
}

/// RBF widths searched by default: `2^-15, 2^-13, ..., 2^3`.
pub fn default_gamma_grid() -> Vec<f64> {
    power_grid(-15, 3, 2)
}

/// Box constraints searched by default: `2^-5, 2^-3, ..., 2^15`.
pub fn default_c_grid() -> Vec<f64> {
    power_grid(-5, 15, 2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSelection {
    pub gamma: f64,
    pub c_box: f64,
    pub cv_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub gamma: f64,
    pub c_box: f64,
    pub fold_accuracy: Vec<f64>,
}

impl GridCell {
    pub fn mean_accuracy(&self) -> f64 {
        self.fold_accuracy.iter().sum::<f64>() / self.fold_accuracy.len() as f64
    }
}

fn sub_gram(gram: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(rows.len(), cols.len());
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            out.set(a, b, gram.get(i, j));
        }
    }
    out
}

/// Mean k-fold accuracy of an RBF SVM for every `(gamma, C)` pair.
///
/// `targets` are `+1/-1`; folds are stratified on them with `seed`. Cells run
/// in parallel.
pub fn grid_search_cells(
    x: &Matrix,
    targets: &[f64],
    gammas: &[f64],
    c_grid: &[f64],
    folds: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<GridCell>> {
    if gammas.is_empty() || c_grid.is_empty() {
        return Err(Error::Config("grid search needs non-empty grids".into()));
    }
    if x.rows() != targets.len() {
        return Err(Error::Config(
            "feature rows and targets differ in length".into(),
        ));
    }
    let classes: Vec<usize> = targets.iter().map(|&t| usize::from(t < 0.0)).collect();
    let all: Vec<usize> = (0..x.rows()).collect();
    let fold_sets = stratified_folds(&classes, &all, folds, seed);
    if fold_sets.len() < 2 {
        return Err(Error::Config(
            "cross-validation needs at least 2 folds".into(),
        ));
    }
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..fold_sets.len())
        .map(|k| {
            let train = fold_sets
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            (train, fold_sets[k].clone())
        })
        .collect();

    let grams: Vec<Matrix> = gammas
        .par_iter()
        .map(|&g| Kernel::Rbf { gamma: g }.gram(x))
        .collect();
    let cells: Vec<(usize, f64)> = (0..gammas.len())
        .flat_map(|g| c_grid.iter().map(move |&c| (g, c)))
        .collect();
    cells
        .par_iter()
        .map(|&(g, c)| {
            let gram = &grams[g];
            let mut fold_accuracy = Vec::with_capacity(splits.len());
            for (train, held) in &splits {
                let y_train: Vec<f64> = train.iter().map(|&i| targets[i]).collect();
                let sol = smo_solve(
                    &sub_gram(gram, train, train),
                    &y_train,
                    &SmoConfig::new(c).with_tol(tol),
                )?;
                let cross = sub_gram(gram, held, train);
                let correct = held
                    .iter()
                    .enumerate()
                    .filter(|&(r, &i)| {
                        let score: f64 = (0..train.len())
                            .map(|t| sol.alphas[t] * y_train[t] * cross.get(r, t))
                            .sum::<f64>()
                            + sol.bias;
                        let predicted = if score >= 0.0 { 1.0 } else { -1.0 };
                        predicted == targets[i]
                    })
                    .count();
                fold_accuracy.push(correct as f64 / held.len() as f64);
            }
            Ok(GridCell {
                gamma: gammas[g],
                c_box: c,
                fold_accuracy,
            })
        })
        .collect()
}

/// Best cell by mean fold accuracy; ties go to the smaller `C`, then the smaller `gamma`.
pub fn select_best(cells: &[GridCell]) -> Option<GridSelection> {
    let mut order: Vec<&GridCell> = cells.iter().collect();
    order.sort_by(|a, b| {
        a.c_box
            .total_cmp(&b.c_box)
            .then(a.gamma.total_cmp(&b.gamma))
    });
    let mut best: Option<GridSelection> = None;
    for cell in order {
        let acc = cell.mean_accuracy();
        if best.is_none_or(|b| acc > b.cv_accuracy) {
            best = Some(GridSelection {
                gamma: cell.gamma,
                c_box: cell.c_box,
                cv_accuracy: acc,
            });
        }
    }
    best
}

pub fn grid_search_cv(
    x: &Matrix,
    targets: &[f64],
    gammas: &[f64],
    c_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<GridSelection> {
    let cells = grid_search_cells(x, targets, gammas, c_grid, folds, seed, 1e-3)?;
    select_best(&cells).ok_or_else(|| Error::Config("empty grid".into()))
}
