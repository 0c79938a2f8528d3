use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use samn::baselines::{binary_target, grid_search_cells, power_grid, select_best};
use samn::dataio::{
    load_svmlight, read_csv_features, Dataset, LabelColumn, SplitRatios, StandardizationParams,
};
use samn::harness::{
    emit_table, format_cell, load_dataset, run_experiment, run_repetition, summary_markdown,
    Checkpoint, DataFormat, ExperimentConfig, ModelKind, ResultRow, TrainSettings,
};
use samn::numerics::Matrix;
use samn::samn::Activation;
use samn::{Error, Result};

#[derive(Parser)]
#[command(
    name = "samn",
    version,
    about = "Sample attention memory network benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on one seeded split and save a checkpoint.
    Train(TrainArgs),
    /// Run every repetition described by a TOML experiment file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify the rows of a CSV or svmlight file with a saved checkpoint.
    Predict(PredictArgs),
    /// Cross-validated RBF-SVM grid search on a binary dataset.
    Gridsearch(GridArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "csv")]
    format: DataFormat,
    /// Header name, zero-based index, or "last".
    #[arg(long = "label-col", default_value = "last")]
    label_col: String,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        load_dataset(&self.dataset, self.format, &label_column(&self.label_col))
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "samn")]
    model: ModelKind,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long = "batch-size", default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long = "test-ratio", default_value_t = 0.2)]
    test_ratio: f64,
    #[arg(long = "val-ratio", default_value_t = 0.2)]
    val_ratio: f64,
    /// Extraction layers of the SAMN family.
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, default_value_t = 1)]
    blocknum: usize,
    /// Hidden width; defaults to the number of features.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, default_value = "tanh")]
    activation: Activation,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "csv")]
    format: DataFormat,
    /// CSV column to drop before predicting; when given, accuracy is reported.
    #[arg(long = "label-col")]
    label_col: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long = "gamma-exp", num_args = 3, allow_negative_numbers = true, value_names = ["LO", "HI", "STEP"], default_values_t = [-15, 3, 2])]
    gamma_exp: Vec<i32>,
    #[arg(long = "c-exp", num_args = 3, allow_negative_numbers = true, value_names = ["LO", "HI", "STEP"], default_values_t = [-5, 15, 2])]
    c_exp: Vec<i32>,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
}

fn label_column(text: &str) -> LabelColumn {
    match text.parse() {
        Ok(l) => l,
        Err(never) => match never {},
    }
}

fn train(args: &TrainArgs) -> Result<()> {
    let data = args.data.load()?;
    let mut settings = TrainSettings {
        epochs: args.epochs,
        learning_rate: args.lr,
        batch_size: args.batch_size,
        ..TrainSettings::new(args.seed)
    };
    settings.samn.layers = args.layers;
    settings.samn.blocknum = args.blocknum;
    settings.samn.hidden_width = args.width;
    settings.samn.activation = args.activation;
    let ratios = SplitRatios {
        test: args.test_ratio,
        val: args.val_ratio,
    };
    ratios.validate().map_err(Error::Config)?;

    let rep = run_repetition(&data, args.model, &settings, ratios, 1)?;
    let stem = format!("{}_{}_seed{}", data.name, args.model, args.seed);
    let checkpoint_path = args.out.join(format!("{stem}.json"));
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.display().to_string(),
        source,
    })?;
    rep.checkpoint(&data).save(&checkpoint_path)?;
    let row = ResultRow::new(&data.name, args.model.name(), args.seed, &rep.metrics);
    let tables = emit_table(&[row], &args.out, &stem)?;

    let m = rep.metrics;
    println!(
        "{} {} seed {}: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
        data.name, args.model, args.seed, m.accuracy, m.precision, m.recall, m.f1
    );
    match &rep.training.selection {
        Some(sel) => println!("selected {sel}"),
        None => println!(
            "snapshot epoch {} (validation accuracy {:.4})",
            rep.training.best_epoch, rep.training.best_val_accuracy
        ),
    }
    println!("checkpoint {}", checkpoint_path.display());
    println!("metrics {}", tables.csv.display());
    Ok(())
}

fn experiment(path: &Path) -> Result<()> {
    let config = ExperimentConfig::from_file(path)?;
    let outcome = run_experiment(&config)?;
    print!("{}", summary_markdown(&outcome.rows));
    let (mean, std) = (outcome.report.mean, outcome.report.std);
    println!(
        "accuracy {}  precision {}  recall {}  f1 {}",
        format_cell(mean.accuracy, std.accuracy),
        format_cell(mean.precision, std.precision),
        format_cell(mean.recall, std.recall),
        format_cell(mean.f1, std.f1)
    );
    if let Some(t) = &outcome.tables {
        println!("results {}", t.csv.display());
    }
    Ok(())
}

/// Zero-pads svmlight rows whose highest index is below the model's width.
fn pad_columns(x: Matrix, width: usize) -> Matrix {
    if x.cols() >= width {
        return x;
    }
    let mut out = Matrix::zeros(x.rows(), width);
    for r in 0..x.rows() {
        out.row_mut(r)[..x.cols()].copy_from_slice(x.row(r));
    }
    out
}

fn predict(args: &PredictArgs) -> Result<()> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let (x, truth): (Matrix, Option<Vec<String>>) = match args.format {
        DataFormat::Csv => {
            let label = args.label_col.as_deref().map(label_column);
            read_csv_features(&args.input, label.as_ref())?
        }
        DataFormat::Svmlight => {
            let data = load_svmlight(&args.input)?;
            let names = data
                .labels()
                .iter()
                .map(|&l| data.class_names()[l].clone())
                .collect();
            let x = pad_columns(
                data.features().clone(),
                checkpoint.standardization.mean.len(),
            );
            (x, Some(names))
        }
    };
    let predicted = checkpoint.predict(&x)?;
    let mut correct = 0;
    for (i, &c) in predicted.iter().enumerate() {
        let name = &checkpoint.class_names[c];
        println!("{name}");
        if truth.as_ref().is_some_and(|t| &t[i] == name) {
            correct += 1;
        }
    }
    if truth.is_some() {
        eprintln!(
            "accuracy {:.4} ({correct}/{})",
            correct as f64 / predicted.len() as f64,
            predicted.len()
        );
    }
    Ok(())
}

/// `[lo, hi, step]` exponents to powers of two.
fn exponent_grid(range: &[i32]) -> Result<Vec<f64>> {
    match *range {
        [lo, hi, step] if step > 0 => Ok(power_grid(lo, hi, step as usize)),
        _ => Err(Error::Config(format!("bad exponent range {range:?}"))),
    }
}

fn gridsearch(args: &GridArgs) -> Result<()> {
    let data = args.data.load()?;
    if data.n_classes() != 2 {
        return Err(Error::Config(format!(
            "grid search needs a binary dataset; {} has {} classes",
            data.name,
            data.n_classes()
        )));
    }
    let x = StandardizationParams::fit(data.features()).apply(data.features());
    let y: Vec<f64> = data.labels().iter().map(|&l| binary_target(l)).collect();
    let gammas = exponent_grid(&args.gamma_exp)?;
    let cs = exponent_grid(&args.c_exp)?;
    if gammas.is_empty() || cs.is_empty() {
        return Err(Error::Config("empty parameter grid".into()));
    }
    let cells = grid_search_cells(&x, &y, &gammas, &cs, args.folds, args.seed, args.tol)?;
    for cell in &cells {
        log::info!(
            "gamma {:e} C {:e}: cv accuracy {:.4}",
            cell.gamma,
            cell.c_box,
            cell.mean_accuracy()
        );
    }
    let best = select_best(&cells).expect("non-empty grid");
    println!(
        "gamma {} C {} cv accuracy {:.4}",
        best.gamma, best.c_box, best.cv_accuracy
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => train(&args),
        Command::Experiment { config } => experiment(&config),
        Command::Predict(args) => predict(&args),
        Command::Gridsearch(args) => gridsearch(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
