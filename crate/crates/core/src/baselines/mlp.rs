use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numerics::{Dense, DenseVars, Matrix, Tape, Var};
use crate::samn::Activation;
use crate::Result;

/// Layer count, width and activation of a baseline's hidden stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractorShape {
    pub width: usize,
    pub depth: usize,
    pub activation: Activation,
}

impl ExtractorShape {
    /// `depth` layers of `width` units with the default activation.
    pub fn new(width: usize, depth: usize) -> Self {
        ExtractorShape {
            width,
            depth,
            activation: Activation::default(),
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }
}

/// Stack of dense layers shared by the network baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extractor {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

impl Extractor {
    pub fn glorot<R: Rng + ?Sized>(n_features: usize, shape: ExtractorShape, rng: &mut R) -> Self {
        let layers = (0..shape.depth)
            .map(|j| {
                Dense::glorot(
                    if j == 0 { n_features } else { shape.width },
                    shape.width,
                    rng,
                )
            })
            .collect();
        Extractor {
            layers,
            activation: shape.activation,
        }
    }

    /// Output width; the input width when there are no layers.
    pub fn output_width(&self, n_features: usize) -> usize {
        self.layers.last().map_or(n_features, Dense::fan_out)
    }

    pub fn record<'t>(&self, tape: &'t Tape) -> Vec<DenseVars<'t>> {
        self.layers.iter().map(|l| l.record(tape)).collect()
    }

    /// Runs recorded `layers` (from [`Extractor::record`]) on `x`.
    pub fn forward<'t>(&self, layers: &[DenseVars<'t>], x: Var<'t>) -> Result<Var<'t>> {
        let mut h = x;
        for l in layers {
            h = self.activation.apply(l.apply(h)?)?;
        }
        Ok(h)
    }
}

pub(crate) fn push_dense<'a>(out: &mut Vec<&'a Matrix>, d: &'a Dense) {
    out.push(&d.weight);
    out.push(&d.bias);
}

pub(crate) fn push_dense_mut<'a>(out: &mut Vec<&'a mut Matrix>, d: &'a mut Dense) {
    out.push(&mut d.weight);
    out.push(&mut d.bias);
}

pub(crate) fn push_vars<'t>(out: &mut Vec<Var<'t>>, d: &DenseVars<'t>) {
    out.push(d.weight);
    out.push(d.bias);
}
