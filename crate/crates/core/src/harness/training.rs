use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ModelKind, TrainSettings};
use crate::baselines::{
    binary_target, default_c_grid, default_gamma_grid, grid_search_cells, select_best, smo_train,
    Cenet, CenetParams, Dnmsvm, DnmsvmParams, GridSelection, Kernel, SmoConfig, SvmModel,
    PENALTY_GRID,
};
use crate::dataio::{class_grouped_batches, Batch, Dataset};
use crate::numerics::{AdamConfig, Matrix, NumericsError};
use crate::samn::{SamnModel, TrainedSamn};
use crate::{Error, Result};

/// A frozen model ready for prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Samn(TrainedSamn),
    Cenet(CenetParams),
    Dnmsvm(DnmsvmParams),
    Svc(SvmModel),
}

impl TrainedModel {
    /// Class ids for every row of `x` (standardized features).
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        match self {
            TrainedModel::Samn(m) => Ok(m.predict(x)?.classes),
            TrainedModel::Cenet(p) => p.predict(x),
            TrainedModel::Dnmsvm(p) => p.predict(x),
            TrainedModel::Svc(m) => (0..x.rows())
                .map(|r| Ok(if m.classify(x.row(r))?.1 > 0 { 0 } else { 1 }))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub model: TrainedModel,
    /// 1-based epoch of the retained snapshot; 0 for SVC.
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    /// Validation accuracy after every epoch.
    pub val_curve: Vec<f64>,
    /// Mean batch loss of every epoch.
    pub loss_curve: Vec<f64>,
    /// Chosen DNMSVM penalty or SVC grid cell.
    pub selection: Option<String>,
    /// Every dataset row that training, selection or validation looked at.
    pub rows_touched: Vec<usize>,
}

fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(labels).filter(|(p, y)| p == y).count() as f64 / labels.len() as f64
}

/// The network side of the epoch loop.
trait EpochModel {
    fn warm_up(&mut self, _features: &Matrix, _batches: &[Batch]) -> Result<()> {
        Ok(())
    }
    fn begin_epoch(&mut self) {}
    fn train_batch(&mut self, features: &Matrix, batch: &Batch) -> Result<f64>;
    fn snapshot(&self) -> Result<TrainedModel>;
}

impl EpochModel for SamnModel {
    fn warm_up(&mut self, features: &Matrix, batches: &[Batch]) -> Result<()> {
        SamnModel::warm_up(self, features, batches)
    }
    fn begin_epoch(&mut self) {
        SamnModel::begin_epoch(self)
    }
    fn train_batch(&mut self, features: &Matrix, batch: &Batch) -> Result<f64> {
        SamnModel::train_batch(self, features, batch)
    }
    fn snapshot(&self) -> Result<TrainedModel> {
        Ok(TrainedModel::Samn(SamnModel::snapshot(self)?))
    }
}

impl EpochModel for Cenet {
    fn train_batch(&mut self, features: &Matrix, batch: &Batch) -> Result<f64> {
        Cenet::train_batch(self, features, batch)
    }
    fn snapshot(&self) -> Result<TrainedModel> {
        Ok(TrainedModel::Cenet(self.params().clone()))
    }
}

impl EpochModel for Dnmsvm {
    fn train_batch(&mut self, features: &Matrix, batch: &Batch) -> Result<f64> {
        Dnmsvm::train_batch(self, features, batch)
    }
    fn snapshot(&self) -> Result<TrainedModel> {
        Ok(TrainedModel::Dnmsvm(self.params().clone()))
    }
}

fn as_divergence(err: Error, model: ModelKind, epoch: usize) -> Error {
    match err {
        Error::Numerics(NumericsError::NonFinite { .. }) => Error::Divergence {
            model: model.to_string(),
            epoch,
            loss: f64::NAN,
        },
        other => other,
    }
}

/// Per-epoch batch seeds drawn from the run seed.
fn epoch_seeds(seed: u64, epochs: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_ba7c_4e5);
    (0..=epochs).map(|_| rng.gen()).collect()
}

struct LoopResult {
    model: TrainedModel,
    best_epoch: usize,
    best_val_accuracy: f64,
    val_curve: Vec<f64>,
    loss_curve: Vec<f64>,
    rows: RowSet,
}

/// Rows read during training.
struct RowSet(Vec<bool>);

impl RowSet {
    fn new(n: usize) -> Self {
        RowSet(vec![false; n])
    }

    fn mark(&mut self, rows: impl IntoIterator<Item = usize>) {
        for r in rows {
            self.0[r] = true;
        }
    }

    fn merge(&mut self, other: &RowSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn into_sorted(self) -> Vec<usize> {
        self.0
            .into_iter()
            .enumerate()
            .filter(|(_, t)| *t)
            .map(|(i, _)| i)
            .collect()
    }
}

fn epoch_loop<M: EpochModel>(
    model: &mut M,
    kind: ModelKind,
    settings: &TrainSettings,
    data: &Dataset,
    train: &[usize],
    val: &[usize],
) -> Result<LoopResult> {
    let mut rows = RowSet::new(data.len());
    rows.mark(val.iter().copied());
    let features = data.features();
    let val_x = features.select_rows(val);
    let val_y: Vec<usize> = val.iter().map(|&i| data.labels()[i]).collect();
    let seeds = epoch_seeds(settings.seed, settings.epochs);

    let warm = class_grouped_batches(data, train, settings.batch_size, seeds[0]);
    rows.mark(warm.iter().flat_map(Batch::indices));
    model
        .warm_up(features, &warm)
        .map_err(|e| as_divergence(e, kind, 0))?;

    let mut best: Option<(TrainedModel, usize, f64)> = None;
    let mut val_curve = Vec::with_capacity(settings.epochs);
    let mut loss_curve = Vec::with_capacity(settings.epochs);
    for epoch in 1..=settings.epochs {
        model.begin_epoch();
        let batches = class_grouped_batches(data, train, settings.batch_size, seeds[epoch]);
        let mut total = 0.0;
        for batch in &batches {
            rows.mark(batch.indices());
            let loss = model
                .train_batch(features, batch)
                .map_err(|e| as_divergence(e, kind, epoch))?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    model: kind.to_string(),
                    epoch,
                    loss,
                });
            }
            total += loss;
        }
        loss_curve.push(total / batches.len() as f64);

        let snapshot = model.snapshot()?;
        let acc = accuracy(&snapshot.predict(&val_x)?, &val_y);
        val_curve.push(acc);
        // ties go to the later, longer-trained epoch
        if best.as_ref().is_none_or(|b| acc >= b.2) {
            best = Some((snapshot, epoch, acc));
        }
        log::debug!(
            "{kind} epoch {epoch}: loss {:.6}, val acc {acc:.4}",
            total / batches.len() as f64
        );
    }
    let (model, best_epoch, best_val_accuracy) = best.expect("at least one epoch");
    Ok(LoopResult {
        model,
        best_epoch,
        best_val_accuracy,
        val_curve,
        loss_curve,
        rows,
    })
}

/// Trains `kind` on the `train` rows of `data` (already standardized) and
/// keeps the epoch with the best accuracy on the `val` rows.
///
/// SVC instead grid-searches `(gamma, C)` by cross-validation on
/// `train ∪ val` and refits there.
pub fn run_training(
    kind: ModelKind,
    settings: &TrainSettings,
    data: &Dataset,
    train: &[usize],
    val: &[usize],
) -> Result<TrainingOutcome> {
    settings.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Config(
            "training and validation rows must be non-empty".into(),
        ));
    }
    if kind.is_binary_only() && data.n_classes() != 2 {
        return Err(Error::Config(format!(
            "{kind} is binary-only; {} has {} classes",
            data.name,
            data.n_classes()
        )));
    }
    let adam = AdamConfig::with_learning_rate(settings.learning_rate);
    let n = data.n_features();
    let c = data.n_classes();

    let (run, selection) = match kind {
        ModelKind::Samn | ModelKind::San | ModelKind::Mbn => {
            let config = settings
                .samn
                .config(kind.samn_variant().expect("SAMN family"));
            let mut m = SamnModel::new(config, n, c, adam, settings.seed)?;
            (epoch_loop(&mut m, kind, settings, data, train, val)?, None)
        }
        ModelKind::Cenet => {
            let mut m = Cenet::new(n, c, settings.baseline_shape(n), adam, settings.seed)?;
            (epoch_loop(&mut m, kind, settings, data, train, val)?, None)
        }
        ModelKind::Dnmsvm => {
            let mut best: Option<(f64, LoopResult)> = None;
            let mut rows = RowSet::new(data.len());
            for penalty in PENALTY_GRID {
                let mut m =
                    Dnmsvm::new(n, settings.baseline_shape(n), penalty, adam, settings.seed)?;
                let run = epoch_loop(&mut m, kind, settings, data, train, val)?;
                rows.merge(&run.rows);
                if best
                    .as_ref()
                    .is_none_or(|(_, b)| run.best_val_accuracy > b.best_val_accuracy)
                {
                    best = Some((penalty, run));
                }
            }
            let (penalty, mut run) = best.expect("non-empty penalty grid");
            run.rows = rows;
            (run, Some(format!("C={penalty}")))
        }
        ModelKind::Svc => {
            let mut fit_rows: Vec<usize> = train.iter().chain(val).copied().collect();
            fit_rows.sort_unstable();
            let x = data.features().select_rows(&fit_rows);
            let y: Vec<f64> = fit_rows
                .iter()
                .map(|&i| binary_target(data.labels()[i]))
                .collect();
            let cells = grid_search_cells(
                &x,
                &y,
                &default_gamma_grid(),
                &default_c_grid(),
                settings.cv_folds,
                settings.seed,
                1e-3,
            )?;
            let GridSelection {
                gamma,
                c_box,
                cv_accuracy,
            } = select_best(&cells).expect("non-empty grid");
            let svm = smo_train(&x, &y, Kernel::Rbf { gamma }, &SmoConfig::new(c_box))?;
            let mut rows = RowSet::new(data.len());
            rows.mark(fit_rows);
            let run = LoopResult {
                model: TrainedModel::Svc(svm),
                best_epoch: 0,
                best_val_accuracy: cv_accuracy,
                val_curve: Vec::new(),
                loss_curve: Vec::new(),
                rows,
            };
            (run, Some(format!("gamma={gamma},C={c_box}")))
        }
    };
    Ok(TrainingOutcome {
        model: run.model,
        best_epoch: run.best_epoch,
        best_val_accuracy: run.best_val_accuracy,
        val_curve: run.val_curve,
        loss_curve: run.loss_curve,
        selection,
        rows_touched: run.rows.into_sorted(),
    })
}
