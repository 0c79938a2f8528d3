mod common;

use common::{full_batch, random_matrix, rng};
use proptest::prelude::*;
use samn::dataio::{
    class_grouped_batches, stratified_split, Dataset, SplitRatios, StandardizationParams,
};
use samn::harness::{compute_metrics, ConfusionMatrix};
use samn::numerics::{cosine, AdamConfig, Matrix, Tape};
use samn::samn::{
    attention_weights, inner_loss, inter_loss, sample_attention, SamnConfig, SamnModel, Variant,
};

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-3.0f64..3.0, r * c)
            .prop_map(move |v| Matrix::from_vec(r, c, v).unwrap())
    })
}

fn labelled(n_classes: usize, per_class: std::ops::Range<usize>) -> impl Strategy<Value = Dataset> {
    prop::collection::vec(per_class, n_classes).prop_flat_map(|counts| {
        let labels: Vec<usize> = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| vec![c; k])
            .collect();
        let n = labels.len();
        prop::collection::vec(-5.0f64..5.0, n * 2).prop_map(move |v| {
            Dataset::from_labels("p", Matrix::from_vec(n, 2, v).unwrap(), labels.clone()).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn attention_is_row_stochastic(x in matrix(6, 4)) {
        let a = attention_weights(&x).unwrap();
        for i in 0..a.rows() {
            let row = a.row(i);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn attention_preserves_shape(x in matrix(6, 4), blocks in 0usize..4) {
        prop_assert_eq!(sample_attention(&x, blocks).unwrap().shape(), x.shape());
    }

    #[test]
    fn singleton_attention_is_identity(row in prop::collection::vec(-10.0f64..10.0, 1..6)) {
        let x = Matrix::row_vector(&row);
        prop_assert_eq!(sample_attention(&x, 1).unwrap(), x);
    }

    #[test]
    fn softmax_rows_sum_to_one(x in matrix(5, 5)) {
        let tape = Tape::new();
        let p = tape.constant(x).row_softmax().unwrap();
        let p = p.value();
        for i in 0..p.rows() {
            prop_assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn cosine_is_symmetric(u in prop::collection::vec(-4.0f64..4.0, 3), v in prop::collection::vec(-4.0f64..4.0, 3)) {
        prop_assert_eq!(cosine(&u, &v), cosine(&v, &u));
    }

    #[test]
    fn loss_ranges(seed in 0u64..1000, n in 1usize..8, c in 2usize..5) {
        let mut r = rng(seed);
        let m = random_matrix(n, 3, 2.0, &mut r);
        let protos = random_matrix(c, 3, 2.0, &mut r);
        let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
        let tape = Tape::new();
        let inner = inner_loss(tape.constant(m), &labels, tape.constant(protos.clone())).unwrap().value().item();
        let inter = inter_loss(tape.constant(protos)).unwrap().value().item();
        prop_assert!(inner >= 0.0);
        prop_assert!((-1.0..=1.0).contains(&inter));
    }

    #[test]
    fn memory_stays_in_activation_ranges(seed in 0u64..500, steps in 1usize..6) {
        let data = common::blobs(&[vec![0.0, 0.0, 0.0], vec![2.0, 1.0, -1.0], vec![-2.0, 1.0, 1.0]], 5, 1.0, seed);
        let rows: Vec<usize> = (0..data.len()).collect();
        let batches = class_grouped_batches(&data, &rows, 4, seed);
        let mut model = SamnModel::new(SamnConfig::default(), 3, 3, AdamConfig::default(), seed).unwrap();
        model.warm_up(data.features(), &batches).unwrap();
        for _ in 0..steps {
            for b in &batches {
                model.train_batch(data.features(), b).unwrap();
                let state = model.state();
                prop_assert!(state.memory.as_slice().iter().all(|&h| h > 0.0 && h < 1.0));
                prop_assert!(state.prototypes.as_slice().iter().all(|&s| s > -1.0 && s < 1.0));
            }
        }
    }

    #[test]
    fn metrics_are_bounded(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..40)) {
        let (pred, labels): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let m = compute_metrics(&pred, &labels, 4);
        prop_assert!(m.as_array().iter().all(|v| (0.0..=1.0).contains(v)));
        let cm = ConfusionMatrix::new(&pred, &labels, 4);
        prop_assert_eq!(cm.total(), labels.len());
        prop_assert!((m.accuracy - cm.trace() as f64 / cm.total() as f64).abs() < 1e-15);
    }

    #[test]
    fn splits_partition_and_repeat(data in labelled(3, 3..20), seed in 0u64..1000) {
        let a = stratified_split(&data, seed, 1, SplitRatios::default()).unwrap();
        let b = stratified_split(&data, seed, 1, SplitRatios::default()).unwrap();
        prop_assert!(a.is_partition_of(data.len()));
        prop_assert_eq!(&a, &b);
        for c in 0..3 {
            prop_assert!(a.train.iter().any(|&i| data.labels()[i] == c));
        }
    }

    #[test]
    fn batches_partition_the_rows(data in labelled(2, 2..30), size in 1usize..40, seed in 0u64..100) {
        let rows: Vec<usize> = (0..data.len()).collect();
        let batches = class_grouped_batches(&data, &rows, size, seed);
        let mut seen: Vec<usize> = batches.iter().flat_map(|b| b.indices()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, rows);
        prop_assert_eq!(batches.len(), data.len().div_ceil(size));
    }

    #[test]
    fn standardization_uses_training_rows_only(data in labelled(2, 5..15), seed in 0u64..100) {
        let plan = stratified_split(&data, seed, 1, SplitRatios::default()).unwrap();
        let fitted = StandardizationParams::fit_rows(data.features(), &plan.train);
        for col in 0..2 {
            let vals: Vec<f64> = plan.train.iter().map(|&i| data.features().get(i, col)).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
            prop_assert!((fitted.mean[col] - mean).abs() < 1e-12);
            prop_assert!((fitted.std[col] - var.sqrt().max(1e-8)).abs() < 1e-12);
        }
        let z = fitted.apply(data.features());
        let i = plan.test[0];
        let expected = (data.features().get(i, 0) - fitted.mean[0]) / fitted.std[0];
        prop_assert!((z.get(i, 0) - expected).abs() < 1e-12);
    }
}

#[test]
fn san_has_no_memory_parameters() {
    let model = SamnModel::new(
        SamnConfig::with_variant(Variant::San),
        3,
        2,
        AdamConfig::default(),
        1,
    )
    .unwrap();
    assert!(model.params().memory.is_none());
    let data = common::blobs(&[vec![0.0; 3], vec![1.0; 3]], 3, 0.2, 1);
    let batch = full_batch(data.labels(), 2);
    let (_, grads) = {
        let mut m = model.clone();
        m.warm_up(data.features(), std::slice::from_ref(&batch))
            .unwrap();
        m.loss_and_gradients(data.features(), &batch).unwrap()
    };
    assert_eq!(grads.len(), 6);
}
