//! Training loops, evaluation and result files.

mod checkpoint;
mod config;
mod experiment;
mod metrics;
mod table;
mod training;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{
    default_seeds, load_dataset, parse_seed_list, DataFormat, ExperimentConfig, ModelKind,
    SamnSettings, TrainSettings, SEEDS_ENV,
};
pub use experiment::{
    run_experiment, run_experiment_on, run_repetition, run_repetitions, ExperimentOutcome,
    ProtocolAudit, Repetition,
};
pub use metrics::{compute_metrics, ConfusionMatrix, Metrics, MetricsReport};
pub use table::{
    emit_table, format_cell, read_results_csv, results_csv, summary_markdown, write_atomic,
    EmittedTables, ResultRow,
};
pub use training::{run_training, TrainedModel, TrainingOutcome};
