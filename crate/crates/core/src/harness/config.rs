use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::ExtractorShape;
use crate::dataio::{load_csv, load_svmlight, Dataset, LabelColumn, SplitRatios};
use crate::samn::{Activation, SamnConfig, Variant};
use crate::{Error, Result};

/// Environment variable overriding the default seed list, e.g. `SAMN_SEEDS=1,2,3`.
pub const SEEDS_ENV: &str = "SAMN_SEEDS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Samn,
    San,
    Mbn,
    Cenet,
    Dnmsvm,
    Svc,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Samn,
        ModelKind::San,
        ModelKind::Mbn,
        ModelKind::Cenet,
        ModelKind::Dnmsvm,
        ModelKind::Svc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Samn => "samn",
            ModelKind::San => "san",
            ModelKind::Mbn => "mbn",
            ModelKind::Cenet => "cenet",
            ModelKind::Dnmsvm => "dnmsvm",
            ModelKind::Svc => "svc",
        }
    }

    pub fn samn_variant(self) -> Option<Variant> {
        match self {
            ModelKind::Samn => Some(Variant::Full),
            ModelKind::San => Some(Variant::San),
            ModelKind::Mbn => Some(Variant::Mbn),
            _ => None,
        }
    }

    pub fn is_binary_only(self) -> bool {
        matches!(self, ModelKind::Dnmsvm | ModelKind::Svc)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    #[default]
    Csv,
    Svmlight,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DataFormat::Csv),
            "svmlight" | "libsvm" => Ok(DataFormat::Svmlight),
            other => Err(Error::Config(format!("unknown data format {other:?}"))),
        }
    }
}

/// Loads a dataset; `label` is ignored for svmlight files.
pub fn load_dataset(path: &Path, format: DataFormat, label: &LabelColumn) -> Result<Dataset> {
    Ok(match format {
        DataFormat::Csv => load_csv(path, label)?,
        DataFormat::Svmlight => load_svmlight(path)?,
    })
}

/// Architecture of the SAMN family; the variant comes from the model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamnSettings {
    pub layers: usize,
    pub blocknum: usize,
    pub hidden_width: Option<usize>,
    pub activation: Activation,
}

impl Default for SamnSettings {
    fn default() -> Self {
        let c = SamnConfig::default();
        SamnSettings {
            layers: c.layers,
            blocknum: c.blocknum,
            hidden_width: c.hidden_width,
            activation: c.activation,
        }
    }
}

impl SamnSettings {
    pub fn config(&self, variant: Variant) -> SamnConfig {
        SamnConfig {
            layers: self.layers,
            blocknum: self.blocknum,
            hidden_width: self.hidden_width,
            activation: self.activation,
            variant,
        }
    }
}

/// Optimisation settings shared by every model of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub samn: SamnSettings,
    /// Hidden layers of CENet and DNMSVM.
    pub baseline_depth: usize,
    pub cv_folds: usize,
}

impl TrainSettings {
    pub fn new(seed: u64) -> Self {
        TrainSettings {
            epochs: 1000,
            learning_rate: 0.01,
            batch_size: 64,
            seed,
            samn: SamnSettings::default(),
            baseline_depth: 3,
            cv_folds: 5,
        }
    }

    /// Width-`n` hidden stack with the SAMN extractor's activation.
    pub fn baseline_shape(&self, n_features: usize) -> ExtractorShape {
        ExtractorShape::new(
            self.samn.hidden_width.unwrap_or(n_features),
            self.baseline_depth,
        )
        .with_activation(self.samn.activation)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config(
                "cross-validation needs at least 2 folds".into(),
            ));
        }
        Ok(())
    }
}

/// One (dataset, model) experiment, read from TOML.
///
/// ```toml
/// dataset = "data/iris.csv"
/// model = "samn"
/// epochs = 1000
/// seeds = [1, 2, 3, 4, 5]
/// output_dir = "results"
///
/// [samn]
/// blocknum = 1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    #[serde(default)]
    pub format: DataFormat,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    pub model: ModelKind,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_test_ratio")]
    pub test_ratio: f64,
    #[serde(default = "default_val_ratio")]
    pub val_ratio: f64,
    /// Defaults to `SAMN_SEEDS` if set, else `1..=repetitions`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub samn: SamnSettings,
}

fn default_label_column() -> String {
    "last".into()
}
fn default_epochs() -> usize {
    1000
}
fn default_learning_rate() -> f64 {
    0.01
}
fn default_batch_size() -> usize {
    64
}
fn default_repetitions() -> usize {
    5
}
fn default_test_ratio() -> f64 {
    0.2
}
fn default_val_ratio() -> f64 {
    0.2
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, model: ModelKind) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            format: DataFormat::default(),
            label_column: default_label_column(),
            model,
            epochs: default_epochs(),
            learning_rate: default_learning_rate(),
            batch_size: default_batch_size(),
            repetitions: default_repetitions(),
            test_ratio: default_test_ratio(),
            val_ratio: default_val_ratio(),
            seeds: None,
            output_dir: default_output_dir(),
            samn: SamnSettings::default(),
        }
    }

    /// Parses TOML; relative paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("experiment config: {e}")))?;
        for p in [&mut config.dataset, &mut config.output_dir] {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn split_ratios(&self) -> SplitRatios {
        SplitRatios {
            test: self.test_ratio,
            val: self.val_ratio,
        }
    }

    pub fn label(&self) -> LabelColumn {
        match self.label_column.parse() {
            Ok(label) => label,
            Err(never) => match never {},
        }
    }

    pub fn train_settings(&self, seed: u64) -> TrainSettings {
        TrainSettings {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            samn: self.samn.clone(),
            ..TrainSettings::new(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        self.split_ratios().validate().map_err(Error::Config)?;
        self.train_settings(0).validate()?;
        if let Some(seeds) = &self.seeds {
            if seeds.len() < self.repetitions {
                return Err(Error::Config(format!(
                    "{} repetitions but only {} seeds",
                    self.repetitions,
                    seeds.len()
                )));
            }
        }
        Ok(())
    }

    /// The first `repetitions` seeds of the configured, environment or default list.
    pub fn resolved_seeds(&self) -> Result<Vec<u64>> {
        let seeds = match &self.seeds {
            Some(s) => s.clone(),
            None => default_seeds(self.repetitions)?,
        };
        if seeds.len() < self.repetitions {
            return Err(Error::Config(format!(
                "{} repetitions but only {} seeds",
                self.repetitions,
                seeds.len()
            )));
        }
        Ok(seeds[..self.repetitions].to_vec())
    }
}

/// `SAMN_SEEDS` when set, otherwise `1..=count`.
pub fn default_seeds(count: usize) -> Result<Vec<u64>> {
    match std::env::var(SEEDS_ENV) {
        Ok(text) => parse_seed_list(&text),
        Err(_) => Ok((1..=count as u64).collect()),
    }
}

pub fn parse_seed_list(text: &str) -> Result<Vec<u64>> {
    let seeds = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| Error::Config(format!("bad seed {s:?} in {SEEDS_ENV}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if seeds.is_empty() {
        return Err(Error::Config(format!("{SEEDS_ENV} is empty")));
    }
    Ok(seeds)
}
