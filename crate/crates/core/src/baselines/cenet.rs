//! Fully connected softmax classifier trained with cross-entropy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{push_dense, push_dense_mut, push_vars, Extractor, ExtractorShape};
use crate::dataio::Batch;
use crate::numerics::{Adam, AdamConfig, Dense, Matrix, Tape};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenetParams {
    pub extractor: Extractor,
    pub head: Dense,
}

impl CenetParams {
    pub fn init(n_features: usize, n_classes: usize, shape: ExtractorShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let extractor = Extractor::glorot(n_features, shape, &mut rng);
        let head = Dense::glorot(extractor.output_width(n_features), n_classes, &mut rng);
        CenetParams { extractor, head }
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

    pub fn n_classes(&self) -> usize {
        self.head.fan_out()
    }

    /// Class logits, one row per input row.
    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        let tape = Tape::new();
        let layers = self.extractor.record(&tape);
        let head = self.head.record(&tape);
        let out = head.apply(self.extractor.forward(&layers, tape.constant(x.clone()))?)?;
        let logits = out.value().clone();
        Ok(logits)
    }

    /// Argmax of the logits; ties go to the lowest class id.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let logits = self.logits(x)?;
        Ok((0..logits.rows()).map(|r| argmax(logits.row(r))).collect())
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone)]
pub struct Cenet {
    params: CenetParams,
    adam: Adam,
}

impl Cenet {
    /// Hidden stack of `shape` followed by a linear `n_classes` head.
    pub fn new(
        n_features: usize,
        n_classes: usize,
        shape: ExtractorShape,
        adam: AdamConfig,
        seed: u64,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        let params = CenetParams::init(n_features, n_classes, shape, seed);
        Self::from_params(params, adam)
    }

    pub fn from_params(params: CenetParams, adam: AdamConfig) -> Result<Self> {
        let shapes: Vec<_> = params.matrices().iter().map(|m| m.shape()).collect();
        Ok(Cenet {
            adam: Adam::new(adam, &shapes)?,
            params,
        })
    }

    pub fn params(&self) -> &CenetParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut CenetParams {
        &mut self.params
    }

    pub fn batch_loss(&self, features: &Matrix, batch: &Batch) -> Result<f64> {
        Ok(self.loss_and_gradients(features, batch)?.0)
    }

    /// Mean `-log p_y` over the batch and its gradient per parameter matrix.
    pub fn loss_and_gradients(
        &self,
        features: &Matrix,
        batch: &Batch,
    ) -> Result<(f64, Vec<Matrix>)> {
        let tape = Tape::new();
        let layers = self.params.extractor.record(&tape);
        let head = self.params.head.record(&tape);
        let x = tape.constant(features.select_rows(&batch.indices()));
        let logits = head.apply(self.params.extractor.forward(&layers, x)?)?;
        let loss = logits.softmax_cross_entropy(&batch.grouped_labels())?;
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_outputs_give_log_c() {
        let mut net =
            Cenet::new(2, 3, ExtractorShape::new(2, 1), AdamConfig::default(), 1).unwrap();
        for m in net.params_mut().matrices_mut() {
            *m = Matrix::zeros(m.rows(), m.cols());
        }
        let features = Matrix::from_rows(&[[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]]).unwrap();
        let batch = Batch {
            groups: vec![vec![0], vec![1], vec![2]],
        };
        let loss = net.batch_loss(&features, &batch).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-12);
        assert_eq!(net.params().predict(&features).unwrap(), vec![0, 0, 0]);
    }
}
