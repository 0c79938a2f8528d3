//! Finite-difference gradient checks shared by the gradient and acceptance targets.

use samn::baselines::{Cenet, Dnmsvm, ExtractorShape};
use samn::dataio::Batch;
use samn::numerics::{AdamConfig, Matrix, Tape, Var};
use samn::samn::{Activation, SamnConfig, SamnModel, Variant};

use super::{full_batch, jitter, numeric_gradients, random_matrix, relative_error, rng};

pub const INSTANCES: u64 = 10;

/// Largest relative error of `op` (reduced to a scalar by a fixed random
/// projection) against central differences over [`INSTANCES`] random inputs.
pub fn op_error(shapes: &[(usize, usize)], op: impl for<'t> Fn(&[Var<'t>]) -> Var<'t>) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..INSTANCES {
        let mut r = rng(seed);
        let mut inputs: Vec<Matrix> = shapes
            .iter()
            .map(|&(a, b)| random_matrix(a, b, 1.5, &mut r))
            .collect();
        let probe = {
            let tape = Tape::new();
            let vars: Vec<Var> = inputs.iter().map(|m| tape.constant(m.clone())).collect();
            let s = op(&vars).shape();
            random_matrix(s.0, s.1, 1.0, &mut r)
        };
        let eval = |ms: &[Matrix]| {
            let tape = Tape::new();
            let vars: Vec<Var> = ms.iter().map(|m| tape.parameter(m.clone())).collect();
            let out = op(&vars)
                .mul(tape.constant(probe.clone()))
                .unwrap()
                .sum()
                .unwrap();
            let v = out.value().item();
            v
        };
        let analytic = {
            let tape = Tape::new();
            let vars: Vec<Var> = inputs.iter().map(|m| tape.parameter(m.clone())).collect();
            let out = op(&vars)
                .mul(tape.constant(probe.clone()))
                .unwrap()
                .sum()
                .unwrap();
            let grads = tape.backward(out).unwrap();
            vars.iter().map(|v| grads.wrt(*v)).collect::<Vec<_>>()
        };
        let numeric = numeric_gradients(&mut inputs, eval);
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    worst
}

pub fn elementwise_and_linear_ops() -> Vec<(&'static str, f64)> {
    vec![
        (
            "matmul",
            op_error(&[(3, 4), (4, 2)], |v| v[0].matmul(v[1]).unwrap()),
        ),
        (
            "transpose",
            op_error(&[(3, 2)], |v| v[0].transpose().unwrap()),
        ),
        (
            "add",
            op_error(&[(2, 3), (2, 3)], |v| v[0].add(v[1]).unwrap()),
        ),
        (
            "add_row",
            op_error(&[(4, 3), (1, 3)], |v| v[0].add_row(v[1]).unwrap()),
        ),
        (
            "sub",
            op_error(&[(2, 3), (2, 3)], |v| v[0].sub(v[1]).unwrap()),
        ),
        (
            "mul",
            op_error(&[(2, 3), (2, 3)], |v| v[0].mul(v[1]).unwrap()),
        ),
        ("scale", op_error(&[(2, 2)], |v| v[0].scale(-2.5).unwrap())),
        (
            "add_scalar",
            op_error(&[(2, 2)], |v| v[0].add_scalar(0.7).unwrap()),
        ),
        ("sigmoid", op_error(&[(3, 3)], |v| v[0].sigmoid().unwrap())),
        ("tanh", op_error(&[(3, 3)], |v| v[0].tanh().unwrap())),
        ("relu", op_error(&[(3, 3)], |v| v[0].relu().unwrap())),
    ]
}

pub fn reductions_and_row_ops() -> Vec<(&'static str, f64)> {
    vec![
        (
            "row_softmax",
            op_error(&[(3, 4)], |v| v[0].row_softmax().unwrap()),
        ),
        (
            "row_mean",
            op_error(&[(5, 3)], |v| v[0].row_mean().unwrap()),
        ),
        ("sum", op_error(&[(2, 5)], |v| v[0].sum().unwrap())),
        (
            "cosine",
            op_error(&[(4, 3), (2, 3)], |v| v[0].cosine(v[1]).unwrap()),
        ),
        (
            "self_cosine",
            op_error(&[(3, 3)], |v| v[0].cosine(v[0]).unwrap()),
        ),
        (
            "softmax_cross_entropy",
            op_error(&[(4, 3)], |v| {
                v[0].softmax_cross_entropy(&[0, 2, 1, 2]).unwrap()
            }),
        ),
        (
            "select_rows",
            op_error(&[(4, 2)], |v| v[0].select_rows(&[3, 0, 3]).unwrap()),
        ),
        (
            "concat_rows",
            op_error(&[(1, 3), (2, 3)], |v| {
                Var::concat_rows(&[v[0], v[1], v[0]]).unwrap()
            }),
        ),
        (
            "attention",
            op_error(&[(4, 3)], |v| {
                samn::samn::sample_attention_block(v[0].scale(0.5).unwrap()).unwrap()
            }),
        ),
    ]
}

/// Data for the full-model checks: 6 samples, 2 classes, 3 features.
fn small_problem(seed: u64) -> (Matrix, Batch) {
    let mut r = rng(1000 + seed);
    let x = random_matrix(6, 3, 2.0, &mut r);
    (x, full_batch(&[0, 1, 0, 1, 1, 0], 2))
}

/// Relative error of `analytic` against central differences of `loss` at `params`.
fn model_error(
    analytic: &[Matrix],
    mut params: Vec<Matrix>,
    loss: impl Fn(&[Matrix]) -> f64,
) -> f64 {
    let numeric = numeric_gradients(&mut params, loss);
    relative_error(analytic, &numeric)
}

pub fn samn_error(variant: Variant, activation: Activation) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..INSTANCES {
        let (x, batch) = small_problem(seed);
        let config = SamnConfig {
            activation,
            ..SamnConfig::with_variant(variant)
        };
        let mut model = SamnModel::new(config, 3, 2, AdamConfig::default(), 50 + seed).unwrap();
        if activation == Activation::Relu {
            jitter(model.params_mut().matrices_mut(), seed);
        }
        model.warm_up(&x, std::slice::from_ref(&batch)).unwrap();
        // give the memory a non-trivial state
        model.train_batch(&x, &batch).unwrap();
        let (_, analytic) = model.loss_and_gradients(&x, &batch).unwrap();
        let params = model.params().matrices().into_iter().cloned().collect();
        let err = model_error(&analytic, params, |ms| {
            let mut probe = model.clone();
            for (dst, src) in probe.params_mut().matrices_mut().into_iter().zip(ms) {
                *dst = src.clone();
            }
            probe.batch_loss(&x, &batch).unwrap()
        });
        worst = worst.max(err);
    }
    worst
}

pub fn cenet_error() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..INSTANCES {
        let (x, _) = small_problem(seed);
        let batch = full_batch(&[0, 1, 2, 1, 2, 0], 3);
        let shape = ExtractorShape::new(3, 3).with_activation(Activation::Relu);
        let mut net = Cenet::new(3, 3, shape, AdamConfig::default(), seed).unwrap();
        jitter(net.params_mut().matrices_mut(), seed);
        let (_, analytic) = net.loss_and_gradients(&x, &batch).unwrap();
        let params = net.params().matrices().into_iter().cloned().collect();
        let err = model_error(&analytic, params, |ms| {
            let mut probe = net.clone();
            for (dst, src) in probe.params_mut().matrices_mut().into_iter().zip(ms) {
                *dst = src.clone();
            }
            probe.batch_loss(&x, &batch).unwrap()
        });
        worst = worst.max(err);
    }
    worst
}

pub fn dnmsvm_error() -> f64 {
    let mut worst: f64 = 0.0;
    for seed in 0..INSTANCES {
        let (x, batch) = small_problem(seed);
        let mut net = Dnmsvm::new(
            3,
            ExtractorShape::new(3, 3),
            1.0,
            AdamConfig::default(),
            seed,
        )
        .unwrap();
        jitter(net.params_mut().matrices_mut(), seed);
        let (_, analytic) = net.loss_and_gradients(&x, &batch).unwrap();
        let params = net.params().matrices().into_iter().cloned().collect();
        let err = model_error(&analytic, params, |ms| {
            let mut probe = net.clone();
            for (dst, src) in probe.params_mut().matrices_mut().into_iter().zip(ms) {
                *dst = src.clone();
            }
            probe.batch_loss(&x, &batch).unwrap()
        });
        worst = worst.max(err);
    }
    worst
}

/// Every full-model loss, by name.
pub fn model_losses() -> Vec<(&'static str, f64)> {
    vec![
        ("samn", samn_error(Variant::Full, Activation::Tanh)),
        ("san", samn_error(Variant::San, Activation::Tanh)),
        ("mbn", samn_error(Variant::Mbn, Activation::Tanh)),
        ("samn_relu", samn_error(Variant::Full, Activation::Relu)),
        ("cenet", cenet_error()),
        ("dnmsvm", dnmsvm_error()),
    ]
}
