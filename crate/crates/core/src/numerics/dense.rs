use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{glorot_uniform, Matrix, NumericsError, Tape, Var};

/// Affine map `x W + b` on row vectors; `weight` is `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Matrix,
}

impl Dense {
    /// Glorot-uniform weight, zero bias.
    pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        Dense {
            weight: glorot_uniform(fan_in, fan_out, rng),
            bias: Matrix::zeros(1, fan_out),
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense {
            weight: Matrix::zeros(fan_in, fan_out),
            bias: Matrix::zeros(1, fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }

    pub fn record<'t>(&self, tape: &'t Tape) -> DenseVars<'t> {
        DenseVars {
            weight: tape.parameter(self.weight.clone()),
            bias: tape.parameter(self.bias.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DenseVars<'t> {
    pub weight: Var<'t>,
    pub bias: Var<'t>,
}

impl<'t> DenseVars<'t> {
    pub fn apply(&self, x: Var<'t>) -> Result<Var<'t>, NumericsError> {
        x.matmul(self.weight)?.add_row(self.bias)
    }
}
