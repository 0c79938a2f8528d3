use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{encode_batch, extract, forward_batch, EncodedBatch, ParamVars};
use super::{SamnConfig, SamnParams, Variant};
use crate::dataio::Batch;
use crate::numerics::{cosine, Adam, AdamConfig, Matrix, Tape};
use crate::{Error, Result};

/// Per-class memory `hᶜ` and output prototype `Sᶜ`, one row per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeState {
    pub memory: Matrix,
    pub prototypes: Matrix,
    /// Batch counter value at the last update of each class.
    pub updated_at: Vec<Option<u64>>,
    pub batches_seen: u64,
}

impl PrototypeState {
    /// `hᶜ = 0` for every class, no prototypes yet.
    pub fn new(n_classes: usize, width: usize) -> Self {
        PrototypeState {
            memory: Matrix::zeros(n_classes, width),
            prototypes: Matrix::zeros(n_classes, width),
            updated_at: vec![None; n_classes],
            batches_seen: 0,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.updated_at.len()
    }

    pub fn is_complete(&self) -> bool {
        self.updated_at.iter().all(Option::is_some)
    }

    /// Stores the new `hᶜ`/`Sᶜ` of every class present in the batch.
    pub fn commit(&mut self, encoded: &EncodedBatch<'_>) {
        self.batches_seen += 1;
        for c in 0..self.n_classes() {
            if let Some(h) = encoded.memory[c] {
                self.memory.row_mut(c).copy_from_slice(h.value().row(0));
            }
            if let Some(s) = encoded.prototypes[c] {
                self.prototypes.row_mut(c).copy_from_slice(s.value().row(0));
                self.updated_at[c] = Some(self.batches_seen);
            }
        }
    }
}

/// Running sum of batch class means over the current epoch (SAN prototypes).
#[derive(Debug, Clone)]
struct EpochMeans {
    sum: Matrix,
    count: Vec<usize>,
}

impl EpochMeans {
    fn new(n_classes: usize, width: usize) -> Self {
        EpochMeans {
            sum: Matrix::zeros(n_classes, width),
            count: vec![0; n_classes],
        }
    }

    fn add(&mut self, encoded: &EncodedBatch<'_>) {
        for (c, mean) in encoded.class_means.iter().enumerate() {
            if let Some(m) = mean {
                for (s, v) in self.sum.row_mut(c).iter_mut().zip(m.value().row(0)) {
                    *s += v;
                }
                self.count[c] += 1;
            }
        }
    }
}

/// A SAMN under training: parameters, prototype memory and optimizer state.
#[derive(Debug, Clone)]
pub struct SamnModel {
    config: SamnConfig,
    params: SamnParams,
    state: PrototypeState,
    adam: Adam,
    epoch_means: EpochMeans,
}

impl SamnModel {
    pub fn new(
        config: SamnConfig,
        n_features: usize,
        n_classes: usize,
        adam: AdamConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if n_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = SamnParams::init(&config, n_features, &mut rng);
        Self::from_params(config, params, n_classes, adam)
    }

    pub fn from_params(
        config: SamnConfig,
        params: SamnParams,
        n_classes: usize,
        adam: AdamConfig,
    ) -> Result<Self> {
        config.validate()?;
        if params.layers.len() != config.layers || params.memory.is_some() != config.has_memory() {
            return Err(Error::Config(
                "parameters do not match the configuration".into(),
            ));
        }
        let width = params.width();
        Ok(SamnModel {
            adam: Adam::new(adam, &params.shapes())?,
            state: PrototypeState::new(n_classes, width),
            epoch_means: EpochMeans::new(n_classes, width),
            config,
            params,
        })
    }

    pub fn config(&self) -> &SamnConfig {
        &self.config
    }

    pub fn params(&self) -> &SamnParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut SamnParams {
        &mut self.params
    }

    pub fn state(&self) -> &PrototypeState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut PrototypeState {
        &mut self.state
    }

    /// One pass over `batches` that only updates prototypes, so that every
    /// class has an `Sᶜ` before the first loss evaluation.
    pub fn warm_up(&mut self, features: &Matrix, batches: &[Batch]) -> Result<()> {
        for batch in batches {
            let tape = Tape::new();
            let vars = ParamVars::record(&self.params, &tape);
            let encoded = encode_batch(&tape, &vars, &self.config, &self.state, features, batch)?;
            self.state.commit(&encoded);
        }
        if !self.state.is_complete() {
            return Err(Error::State("warm-up did not see every class".into()));
        }
        Ok(())
    }

    pub fn begin_epoch(&mut self) {
        let (c, w) = self.epoch_means.sum.shape();
        self.epoch_means = EpochMeans::new(c, w);
    }

    /// `L_total` on `batch` with the current parameters and state, no update.
    pub fn batch_loss(&self, features: &Matrix, batch: &Batch) -> Result<f64> {
        let tape = Tape::new();
        let vars = ParamVars::record(&self.params, &tape);
        let fwd = forward_batch(&tape, &vars, &self.config, &self.state, features, batch)?;
        let loss = fwd.total.value().item();
        Ok(loss)
    }

    /// `L_total` and its gradient for every matrix of [`SamnParams::matrices`].
    pub fn loss_and_gradients(
        &self,
        features: &Matrix,
        batch: &Batch,
    ) -> Result<(f64, Vec<Matrix>)> {
        let tape = Tape::new();
        let vars = ParamVars::record(&self.params, &tape);
        let fwd = forward_batch(&tape, &vars, &self.config, &self.state, features, batch)?;
        let grads = tape.backward(fwd.total)?;
        let loss = fwd.total.value().item();
        Ok((loss, vars.all().into_iter().map(|v| grads.wrt(v)).collect()))
    }

    /// Forward, backward, Adam step, then commit the batch's prototypes.
    pub fn train_batch(&mut self, features: &Matrix, batch: &Batch) -> Result<f64> {
        let tape = Tape::new();
        let vars = ParamVars::record(&self.params, &tape);
        let fwd = forward_batch(&tape, &vars, &self.config, &self.state, features, batch)?;
        let grads = tape.backward(fwd.total)?;
        let grads: Vec<Matrix> = vars.all().into_iter().map(|v| grads.wrt(v)).collect();
        let loss = fwd.total.value().item();
        self.adam.step(&mut self.params.matrices_mut(), &grads)?;
        self.state.commit(&fwd.encoded);
        self.epoch_means.add(&fwd.encoded);
        Ok(loss)
    }

    /// Frozen predictor. SAN uses the mean of this epoch's batch class means
    /// as its prototypes; the other variants use the stored `Sᶜ`.
    pub fn snapshot(&self) -> Result<TrainedSamn> {
        if !self.state.is_complete() {
            return Err(Error::State("model has not seen every class".into()));
        }
        let mut prototypes = self.state.prototypes.clone();
        if self.config.variant == Variant::San {
            for (c, &n) in self.epoch_means.count.iter().enumerate() {
                if n > 0 {
                    let row: Vec<f64> = self
                        .epoch_means
                        .sum
                        .row(c)
                        .iter()
                        .map(|v| v / n as f64)
                        .collect();
                    prototypes.row_mut(c).copy_from_slice(&row);
                }
            }
        }
        Ok(TrainedSamn {
            config: self.config.clone(),
            params: self.params.clone(),
            prototypes,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub classes: Vec<usize>,
    /// `cos(m, Sᶜ)` for every input row and class.
    pub scores: Matrix,
}

/// Parameters plus the prototype snapshot used at inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedSamn {
    pub config: SamnConfig,
    pub params: SamnParams,
    pub prototypes: Matrix,
}

impl TrainedSamn {
    /// Refined representations `m` (all `K` layers, no attention).
    pub fn refine(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.params.input_width() {
            return Err(Error::Numerics(
                crate::numerics::NumericsError::DimensionMismatch {
                    op: "predict",
                    left: x.shape(),
                    right: (self.params.input_width(), self.params.width()),
                },
            ));
        }
        let tape = Tape::new();
        let vars = ParamVars::record(&self.params, &tape);
        let m = extract(
            &vars,
            self.config.activation,
            tape.constant(x.clone()),
            1,
            self.config.layers,
        )?;
        let out = m.value().clone();
        Ok(out)
    }

    /// Most cosine-similar prototype per row; ties go to the lowest class id.
    pub fn predict(&self, x: &Matrix) -> Result<Prediction> {
        let m = self.refine(x)?;
        let c = self.prototypes.rows();
        let mut scores = Matrix::zeros(m.rows(), c);
        let mut classes = Vec::with_capacity(m.rows());
        for i in 0..m.rows() {
            let mut best = 0;
            for k in 0..c {
                let s = cosine(m.row(i), self.prototypes.row(k));
                scores.set(i, k, s);
                if s > scores.get(i, best) {
                    best = k;
                }
            }
            classes.push(best);
        }
        Ok(Prediction { classes, scores })
    }
}
