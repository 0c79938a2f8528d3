use rayon::prelude::*;

use super::checkpoint::Checkpoint;
use super::config::{load_dataset, ExperimentConfig, ModelKind, TrainSettings};
use super::metrics::{compute_metrics, Metrics, MetricsReport};
use super::table::{emit_table, EmittedTables, ResultRow};
use super::training::{run_training, TrainingOutcome};
use crate::dataio::{stratified_split, Dataset, SplitPlan, SplitRatios, StandardizationParams};
use crate::{Error, Result};

/// Index sets one repetition used, kept for the leakage check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolAudit {
    pub n_rows: usize,
    pub test: Vec<usize>,
    pub standardization: Vec<usize>,
    /// Rows read by training, model selection and validation.
    pub training: Vec<usize>,
}

impl ProtocolAudit {
    /// Fails when a test row was used for fitting anything.
    pub fn check(&self) -> Result<()> {
        let mut is_test = vec![false; self.n_rows];
        for &i in &self.test {
            is_test[i] = true;
        }
        for (what, rows) in [
            ("standardization", &self.standardization),
            ("training", &self.training),
        ] {
            if let Some(&i) = rows.iter().find(|&&i| is_test[i]) {
                return Err(Error::State(format!("test row {i} leaked into {what}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Repetition {
    pub seed: u64,
    pub plan: SplitPlan,
    pub standardization: StandardizationParams,
    pub training: TrainingOutcome,
    pub test_predictions: Vec<usize>,
    pub metrics: Metrics,
    pub audit: ProtocolAudit,
}

impl Repetition {
    pub fn checkpoint(&self, dataset: &Dataset) -> Checkpoint {
        Checkpoint::new(
            &dataset.name,
            dataset.class_names().to_vec(),
            self.standardization.clone(),
            self.training.best_epoch,
            self.training.model.clone(),
        )
    }
}

/// Split, standardize on the training rows, train, evaluate on the test rows.
pub fn run_repetition(
    dataset: &Dataset,
    kind: ModelKind,
    settings: &TrainSettings,
    ratios: SplitRatios,
    repetition: usize,
) -> Result<Repetition> {
    let plan = stratified_split(dataset, settings.seed, repetition, ratios)?;
    if !plan.is_partition_of(dataset.len()) {
        return Err(Error::State(
            "split is not a partition of the dataset".into(),
        ));
    }
    let standardization = StandardizationParams::fit_rows(dataset.features(), &plan.train);
    let scaled = dataset.with_features(standardization.apply(dataset.features()))?;
    let training = run_training(kind, settings, &scaled, &plan.train, &plan.val)?;

    let audit = ProtocolAudit {
        n_rows: dataset.len(),
        test: plan.test.clone(),
        standardization: plan.train.clone(),
        training: training.rows_touched.clone(),
    };
    audit.check()?;

    let test_x = scaled.features().select_rows(&plan.test);
    let test_y: Vec<usize> = plan.test.iter().map(|&i| dataset.labels()[i]).collect();
    let test_predictions = training.model.predict(&test_x)?;
    let metrics = compute_metrics(&test_predictions, &test_y, dataset.n_classes());
    log::info!(
        "{} {kind} seed {}: test accuracy {:.4} (snapshot epoch {})",
        dataset.name,
        settings.seed,
        metrics.accuracy,
        training.best_epoch
    );
    Ok(Repetition {
        seed: settings.seed,
        plan,
        standardization,
        training,
        test_predictions,
        metrics,
        audit,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dataset: Dataset,
    pub model: ModelKind,
    pub repetitions: Vec<Repetition>,
    pub rows: Vec<ResultRow>,
    pub report: MetricsReport,
    pub tables: Option<EmittedTables>,
}

/// Runs every seed in parallel on an already loaded dataset; nothing is written.
pub fn run_repetitions(
    dataset: &Dataset,
    config: &ExperimentConfig,
) -> Result<Vec<Result<Repetition>>> {
    config.validate()?;
    let seeds = config.resolved_seeds()?;
    let ratios = config.split_ratios();
    Ok(seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| {
            run_repetition(
                dataset,
                config.model,
                &config.train_settings(seed),
                ratios,
                r + 1,
            )
        })
        .collect())
}

/// Loads the dataset, runs all repetitions and writes
/// `<dataset>_<model>.csv` / `.md` into the output directory. Completed
/// repetitions are written even when another one fails.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let dataset = load_dataset(&config.dataset, config.format, &config.label())?;
    run_experiment_on(dataset, config, true)
}

pub fn run_experiment_on(
    dataset: Dataset,
    config: &ExperimentConfig,
    write: bool,
) -> Result<ExperimentOutcome> {
    let results = run_repetitions(&dataset, config)?;
    let mut repetitions = Vec::new();
    let mut first_error = None;
    for r in results {
        match r {
            Ok(rep) => repetitions.push(rep),
            Err(e) => {
                log::error!("repetition failed: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    let rows: Vec<ResultRow> = repetitions
        .iter()
        .map(|r| ResultRow::new(&dataset.name, config.model.name(), r.seed, &r.metrics))
        .collect();
    let stem = format!("{}_{}", dataset.name, config.model);
    let tables = if write && !rows.is_empty() {
        Some(emit_table(&rows, &config.output_dir, &stem)?)
    } else {
        None
    };
    if let Some(e) = first_error {
        return Err(e);
    }
    let report = MetricsReport::aggregate(repetitions.iter().map(|r| r.metrics).collect());
    Ok(ExperimentOutcome {
        dataset,
        model: config.model,
        repetitions,
        rows,
        report,
        tables,
    })
}
