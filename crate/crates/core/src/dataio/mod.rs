//! Tabular datasets: loading, standardization, stratified splits and
//! class-grouped mini-batches.

mod batch;
mod csv_file;
mod split;
mod standardize;
mod svmlight;

use serde::{Deserialize, Serialize};

use crate::numerics::Matrix;

pub use batch::{class_grouped_batches, Batch};
pub use csv_file::{load_csv, read_csv_features, LabelColumn};
pub use split::{stratified_folds, stratified_split, SplitPlan, SplitRatios};
pub use standardize::StandardizationParams;
pub use svmlight::{load_svmlight, write_svmlight};

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: no data rows")]
    Empty { path: String },
    #[error("{path}: line {line}, column {column}: cannot parse {cell:?} as a number")]
    BadCell {
        path: String,
        line: usize,
        column: usize,
        cell: String,
    },
    #[error("{path}: line {line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("label column {0} not found")]
    MissingLabelColumn(String),
    #[error("class {class:?} has {count} samples, need at least {needed}")]
    ClassTooSmall {
        class: String,
        count: usize,
        needed: usize,
    },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Standardisable feature matrix plus dense integer labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    features: Matrix,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Every class id in `0..class_names.len()` must occur at least once.
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if features.rows() != labels.len() {
            return Err(DataError::Invalid(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        let mut seen = vec![false; class_names.len()];
        for &y in &labels {
            match seen.get_mut(y) {
                Some(s) => *s = true,
                None => {
                    return Err(DataError::Invalid(format!(
                        "label {y} outside 0..{}",
                        class_names.len()
                    )))
                }
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(DataError::Invalid(format!(
                "class {:?} has no samples",
                class_names[c]
            )));
        }
        if !features.is_finite() {
            return Err(DataError::Invalid("non-finite feature value".into()));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            class_names,
        })
    }

    /// Builds class names `"0".."C-1"` from integer labels.
    pub fn from_labels(
        name: impl Into<String>,
        features: Matrix,
        labels: Vec<usize>,
    ) -> Result<Self, DataError> {
        let classes = labels.iter().max().map_or(0, |m| m + 1);
        let names = (0..classes).map(|c| c.to_string()).collect();
        Self::new(name, features, labels, names)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    pub fn with_features(&self, features: Matrix) -> Result<Self, DataError> {
        Self::new(
            self.name.clone(),
            features,
            self.labels.clone(),
            self.class_names.clone(),
        )
    }
}

/// Dense re-encoding of raw labels in first-appearance order.
#[derive(Debug, Default)]
pub(crate) struct LabelEncoder {
    names: Vec<String>,
}

impl LabelEncoder {
    pub(crate) fn encode(&mut self, raw: &str) -> usize {
        let key = canonical_label(raw);
        match self.names.iter().position(|n| *n == key) {
            Some(i) => i,
            None => {
                self.names.push(key);
                self.names.len() - 1
            }
        }
    }

    pub(crate) fn into_names(self) -> Vec<String> {
        self.names
    }
}

/// Numeric labels are normalised so that `+1`, `1` and `1.0` name the same class.
fn canonical_label(raw: &str) -> String {
    let raw = raw.trim();
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => format!("{v}"),
        _ => raw.to_string(),
    }
}
