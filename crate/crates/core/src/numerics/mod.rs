//! Dense matrices, a reverse-mode tape over them, and the Adam update rule.

mod adam;
mod dense;
mod init;
mod matrix;
mod tape;

pub use adam::{Adam, AdamConfig};
pub use dense::{Dense, DenseVars};
pub use init::glorot_uniform;
pub use matrix::{dot, norm, Matrix};
pub use tape::{cosine, Gradients, OpKind, Tape, Var};

/// Lower clamp for vector norms in cosine similarity.
pub const COSINE_EPS: f64 = 1e-12;
/// Lower clamp for probabilities before taking a logarithm.
pub const LOG_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("{op}: dimension mismatch between {}x{} and {}x{}", left.0, left.1, right.0, right.1)]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("buffer of length {len} cannot form a {rows}x{cols} matrix")]
    BadLength {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("ragged rows: expected {expected} columns, found {found}")]
    RaggedRows { expected: usize, found: usize },
    #[error("{op} produced a non-finite value")]
    NonFinite { op: String },
    #[error("{op} needs a non-empty input")]
    Empty { op: &'static str },
    #[error("mean over an empty class group")]
    EmptyClass,
    #[error("backward needs a 1x1 root, got {rows}x{cols}")]
    NonScalarRoot { rows: usize, cols: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("row {row} out of range for {rows} rows")]
    RowOutOfRange { row: usize, rows: usize },
    #[error("learning rate must be positive, got {0}")]
    InvalidLearningRate(f64),
    #[error("optimizer tracks {expected} parameters, got {found}")]
    ParameterCount { expected: usize, found: usize },
}
