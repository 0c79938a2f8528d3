//! Sample attention memory network (SAMN) for tabular classification, with
//! the SVC, CENet and DNMSVM baselines and a reproducible experiment harness.
//!
//! Module map:
//! - [`numerics`]: matrices, reverse-mode tape, Adam.
//! - [`dataio`]: CSV / svmlight loading, standardization, splits, batching.
//! - [`samn`]: the attention + prototype + memory model and its ablations.
//! - [`baselines`]: SMO-trained SVM, CENet, DNMSVM.
//! - [`harness`]: training loops, metrics, experiments, tables, checkpoints.

pub mod baselines;
pub mod dataio;
mod error;
pub mod harness;
pub mod numerics;
pub mod samn;

pub use error::{Error, Result};
