use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::write_atomic;
use super::training::TrainedModel;
use crate::dataio::StandardizationParams;
use crate::numerics::Matrix;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "samn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to classify raw feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub class_names: Vec<String>,
    pub standardization: StandardizationParams,
    /// 1-based epoch the snapshot comes from (0 for SVC).
    pub epoch: usize,
    pub model: TrainedModel,
}

impl Checkpoint {
    pub fn new(
        dataset: &str,
        class_names: Vec<String>,
        standardization: StandardizationParams,
        epoch: usize,
        model: TrainedModel,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            dataset: dataset.into(),
            class_names,
            standardization,
            epoch,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "not a checkpoint (format {:?})",
                c.format
            )));
        }
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                c.version
            )));
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Standardises raw rows and predicts class ids.
    pub fn predict(&self, raw: &Matrix) -> Result<Vec<usize>> {
        if raw.cols() != self.standardization.mean.len() {
            return Err(Error::Config(format!(
                "input has {} features, the model expects {}",
                raw.cols(),
                self.standardization.mean.len()
            )));
        }
        self.model.predict(&self.standardization.apply(raw))
    }
}
