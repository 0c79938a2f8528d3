//! Deep extractor with a squared-hinge linear SVM head.
//!
//! Loss on a batch: `½‖w‖² + C Σ max(1 - yᵢ (wᵀΦ(xᵢ) + b), 0)²`, where `Φ` is
//! the relu extractor and `w` the head weight. Class 0 maps to `y = +1`,
//! class 1 to `y = -1`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{push_dense, push_dense_mut, push_vars, Extractor, ExtractorShape};
use crate::dataio::Batch;
use crate::numerics::{Adam, AdamConfig, Dense, Matrix, Tape};
use crate::{Error, Result};

/// Penalties tried on the validation split.
pub const PENALTY_GRID: [f64; 3] = [0.1, 1.0, 10.0];

/// `+1` for class 0, `-1` for class 1.
pub fn binary_target(class: usize) -> f64 {
    if class == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnmsvmParams {
    pub extractor: Extractor,
    /// `width x 1` weight and `1 x 1` bias.
    pub head: Dense,
    pub penalty: f64,
}

impl DnmsvmParams {
    pub fn init(n_features: usize, shape: ExtractorShape, penalty: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let extractor = Extractor::glorot(n_features, shape, &mut rng);
        let head = Dense::glorot(extractor.output_width(n_features), 1, &mut rng);
        DnmsvmParams {
            extractor,
            head,
            penalty,
        }
    }

    pub fn matrices(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.extractor.layers {
            push_dense(&mut out, l);
        }
        push_dense(&mut out, &self.head);
        out
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for l in &mut self.extractor.layers {
            push_dense_mut(&mut out, l);
        }
        push_dense_mut(&mut out, &mut self.head);
        out
    }

    /// `wᵀΦ(x) + b` for every row of `x`.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        let tape = Tape::new();
        let layers = self.extractor.record(&tape);
        let head = self.head.record(&tape);
        let out = head.apply(self.extractor.forward(&layers, tape.constant(x.clone()))?)?;
        let scores = out.value().as_slice().to_vec();
        Ok(scores)
    }

    /// Class 0 when the score is non-negative, else class 1.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self
            .scores(x)?
            .into_iter()
            .map(|s| if s >= 0.0 { 0 } else { 1 })
            .collect())
    }
}

#[derive(Debug, Clone)]
pub struct Dnmsvm {
    params: DnmsvmParams,
    adam: Adam,
}

impl Dnmsvm {
    /// A zero-depth `shape` gives a plain linear squared-hinge SVM on the raw features.
    pub fn new(
        n_features: usize,
        shape: ExtractorShape,
        penalty: f64,
        adam: AdamConfig,
        seed: u64,
    ) -> Result<Self> {
        Self::from_params(DnmsvmParams::init(n_features, shape, penalty, seed), adam)
    }

    pub fn from_params(params: DnmsvmParams, adam: AdamConfig) -> Result<Self> {
        if !(params.penalty > 0.0) {
            return Err(Error::Config(format!(
                "penalty must be positive, got {}",
                params.penalty
            )));
        }
        let shapes: Vec<_> = params.matrices().iter().map(|m| m.shape()).collect();
        Ok(Dnmsvm {
            adam: Adam::new(adam, &shapes)?,
            params,
        })
    }

    pub fn params(&self) -> &DnmsvmParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut DnmsvmParams {
        &mut self.params
    }

    pub fn batch_loss(&self, features: &Matrix, batch: &Batch) -> Result<f64> {
        Ok(self.loss_and_gradients(features, batch)?.0)
    }

    pub fn loss_and_gradients(
        &self,
        features: &Matrix,
        batch: &Batch,
    ) -> Result<(f64, Vec<Matrix>)> {
        if batch.groups.len() != 2 {
            return Err(Error::Config(format!(
                "DNMSVM is binary, got {} classes",
                batch.groups.len()
            )));
        }
        let tape = Tape::new();
        let layers = self.params.extractor.record(&tape);
        let head = self.params.head.record(&tape);
        let x = tape.constant(features.select_rows(&batch.indices()));
        let scores = head.apply(self.params.extractor.forward(&layers, x)?)?;
        let y: Vec<f64> = batch
            .grouped_labels()
            .into_iter()
            .map(binary_target)
            .collect();
        let slack = scores
            .mul(tape.constant(Matrix::column_vector(&y)))?
            .scale(-1.0)?
            .add_scalar(1.0)?
            .relu()?;
        let hinge = slack.mul(slack)?.sum()?.scale(self.params.penalty)?;
        let reg = head.weight.mul(head.weight)?.sum()?.scale(0.5)?;
        let loss = reg.add(hinge)?;
        let grads = tape.backward(loss)?;
        let mut vars = Vec::new();
        for l in &layers {
            push_vars(&mut vars, l);
        }
        push_vars(&mut vars, &head);
        let value = loss.value().item();
        Ok((value, vars.into_iter().map(|v| grads.wrt(v)).collect()))
    }

    pub fn train_batch(&mut self, features: &Matrix, batch: &Batch) -> Result<f64> {
        let (loss, grads) = self.loss_and_gradients(features, batch)?;
        self.adam.step(&mut self.params.matrices_mut(), &grads)?;
        Ok(loss)
    }
}
