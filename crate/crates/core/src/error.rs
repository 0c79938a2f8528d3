use std::io;

use crate::dataio::DataError;
use crate::numerics::NumericsError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model state: {0}")]
    State(String),
    #[error("{model} diverged at epoch {epoch}: loss is {loss}")]
    Divergence {
        model: String,
        epoch: usize,
        loss: f64,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl Error {
    /// Process exit code: 1 usage, 2 data, 3 numeric divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Data(_) | Error::Io { .. } | Error::Checkpoint(_) => 2,
            Error::Divergence { .. } => 3,
            Error::Numerics(NumericsError::NonFinite { .. }) => 3,
            Error::Numerics(NumericsError::InvalidLearningRate(_)) => 1,
            Error::Numerics(_) | Error::State(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
