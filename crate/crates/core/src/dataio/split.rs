use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

/// Fractions held out for testing (of all rows) and validation (of the rest).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub test: f64,
    pub val: f64,
}

impl Default for SplitRatios {
    /// 8:2 train/test, then 20 % of the training part for validation.
    fn default() -> Self {
        SplitRatios {
            test: 0.2,
            val: 0.2,
        }
    }
}

impl SplitRatios {
    /// 5:5 train/test variant used for large datasets.
    pub fn half() -> Self {
        SplitRatios {
            test: 0.5,
            val: 0.2,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, r) in [("test", self.test), ("val", self.val)] {
            if !(r > 0.0 && r < 1.0) {
                return Err(format!("{name} ratio must lie in (0, 1), got {r}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    /// 1-based repetition number within an experiment.
    pub repetition: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitPlan {
    /// Disjoint and covering `0..n`.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= n || seen[i] {
                return false;
            }
            seen[i] = true;
        }
        seen.into_iter().all(|s| s)
    }
}

/// Splits `total = floor(ratio * sum(counts))` across classes: each class gets
/// `floor(ratio * count)` and the remainder goes to the largest fractional
/// parts, lower class id first on ties.
fn allocate(counts: &[usize], ratio: f64) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    let target = (ratio * n as f64).floor() as usize;
    let mut alloc: Vec<usize> = counts
        .iter()
        .map(|&c| (ratio * c as f64).floor() as usize)
        .collect();
    let mut order: Vec<(f64, usize)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (ratio * c as f64 - alloc[i] as f64, i))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut remaining = target.saturating_sub(alloc.iter().sum());
    for &(_, i) in &order {
        if remaining == 0 {
            break;
        }
        // keep at least one sample of the class outside the held-out part
        if alloc[i] + 1 < counts[i] {
            alloc[i] += 1;
            remaining -= 1;
        }
    }
    alloc
}

fn indices_by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by_class[y].push(i);
    }
    by_class
}

/// Seeded stratified train/validation/test partition.
pub fn stratified_split(
    dataset: &Dataset,
    seed: u64,
    repetition: usize,
    ratios: SplitRatios,
) -> Result<SplitPlan, DataError> {
    ratios.validate().map_err(DataError::Invalid)?;
    let counts = dataset.class_counts();
    for (c, &count) in counts.iter().enumerate() {
        if count < 3 {
            return Err(DataError::ClassTooSmall {
                class: dataset.class_names()[c].clone(),
                count,
                needed: 3,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class = indices_by_class(dataset.labels(), dataset.n_classes());
    for group in &mut by_class {
        group.shuffle(&mut rng);
    }

    let test_alloc = allocate(&counts, ratios.test);
    let rest: Vec<usize> = counts.iter().zip(&test_alloc).map(|(c, t)| c - t).collect();
    let val_alloc = allocate(&rest, ratios.val);

    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (c, group) in by_class.iter().enumerate() {
        let (t, v) = (test_alloc[c], val_alloc[c]);
        test.extend_from_slice(&group[..t]);
        val.extend_from_slice(&group[t..t + v]);
        train.extend_from_slice(&group[t + v..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        seed,
        repetition,
        train,
        val,
        test,
    })
}

/// Seeded stratified k-fold assignment of `indices`. Returns the held-out
/// part of each fold. Folds are reduced when a class has fewer than `k`
/// members.
pub fn stratified_folds(
    labels: &[usize],
    indices: &[usize],
    k: usize,
    seed: u64,
) -> Vec<Vec<usize>> {
    let n_classes = indices.iter().map(|&i| labels[i] + 1).max().unwrap_or(0);
    let mut by_class = vec![Vec::new(); n_classes];
    for &i in indices {
        by_class[labels[i]].push(i);
    }
    let smallest = by_class
        .iter()
        .filter(|g| !g.is_empty())
        .map(Vec::len)
        .min()
        .unwrap_or(0);
    let folds = k.min(smallest).max(2).min(indices.len().max(1));
    if folds < k {
        log::warn!("reducing cross-validation from {k} to {folds} folds: smallest class has {smallest} samples");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for group in &mut by_class {
        group.shuffle(&mut rng);
        for &i in group.iter() {
            out[next % folds].push(i);
            next += 1;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}
