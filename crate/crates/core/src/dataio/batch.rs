use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Dataset;

/// One mini-batch with its sample indices grouped by class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    /// `groups[c]` lists the batch members of class `c` (possibly empty).
    pub groups: Vec<Vec<usize>>,
}

impl Batch {
    /// Indices in grouped order: class 0 members first, then class 1, ...
    pub fn indices(&self) -> Vec<usize> {
        self.groups.concat()
    }

    /// Labels aligned with [`Batch::indices`].
    pub fn grouped_labels(&self) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(c, g)| std::iter::repeat_n(c, g.len()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn present_classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| !g.is_empty())
            .map(|(c, _)| c)
    }
}

/// Shuffles `indices` with `seed` and cuts them into consecutive batches of
/// `batch_size` (the last one may be shorter).
pub fn class_grouped_batches(
    dataset: &Dataset,
    indices: &[usize],
    batch_size: usize,
    seed: u64,
) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch size must be at least 1");
    let mut order = indices.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
        .chunks(batch_size)
        .map(|chunk| {
            let mut groups = vec![Vec::new(); dataset.n_classes()];
            for &i in chunk {
                groups[dataset.labels()[i]].push(i);
            }
            Batch { groups }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;

    fn data(n: usize) -> Dataset {
        let labels = (0..n).map(|i| i % 3).collect();
        Dataset::from_labels("d", Matrix::zeros(n, 2), labels).unwrap()
    }

    #[test]
    fn floor_arithmetic_sizes() {
        let ds = data(100);
        let idx: Vec<usize> = (0..100).collect();
        let sizes: Vec<usize> = class_grouped_batches(&ds, &idx, 32, 1)
            .iter()
            .map(Batch::len)
            .collect();
        assert_eq!(sizes, vec![32, 32, 32, 4]);
    }

    #[test]
    fn oversized_batch_holds_everything() {
        let ds = data(12);
        let idx: Vec<usize> = (0..12).collect();
        let batches = class_grouped_batches(&ds, &idx, 64, 9);
        assert_eq!(batches.len(), 1);
        assert!(batches[0].groups.iter().all(|g| g.len() == 4));
        assert_eq!(batches[0].present_classes().count(), 3);
    }

    #[test]
    fn grouped_labels_align() {
        let ds = data(30);
        let idx: Vec<usize> = (0..30).collect();
        for b in class_grouped_batches(&ds, &idx, 7, 4) {
            let labels: Vec<usize> = b.indices().iter().map(|&i| ds.labels()[i]).collect();
            assert_eq!(labels, b.grouped_labels());
        }
    }
}
