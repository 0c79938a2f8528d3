mod common;

use common::gradcheck;
use common::FD_TOL;
use samn::samn::{Activation, Variant};

fn assert_within(results: &[(&str, f64)]) {
    for (name, err) in results {
        assert!(*err <= FD_TOL, "{name}: relative error {err:e}");
    }
}

#[test]
fn elementwise_and_linear_ops() {
    assert_within(&gradcheck::elementwise_and_linear_ops());
}

#[test]
fn reductions_and_row_ops() {
    assert_within(&gradcheck::reductions_and_row_ops());
}

#[test]
fn samn_full_loss_gradient() {
    assert_within(&[(
        "samn",
        gradcheck::samn_error(Variant::Full, Activation::Tanh),
    )]);
}

#[test]
fn san_loss_gradient() {
    assert_within(&[("san", gradcheck::samn_error(Variant::San, Activation::Tanh))]);
}

#[test]
fn mbn_loss_gradient() {
    assert_within(&[("mbn", gradcheck::samn_error(Variant::Mbn, Activation::Tanh))]);
}

#[test]
fn samn_relu_loss_gradient() {
    assert_within(&[(
        "samn relu",
        gradcheck::samn_error(Variant::Full, Activation::Relu),
    )]);
}

#[test]
fn cenet_loss_gradient() {
    assert_within(&[("cenet", gradcheck::cenet_error())]);
}

#[test]
fn dnmsvm_loss_gradient() {
    assert_within(&[("dnmsvm", gradcheck::dnmsvm_error())]);
}
