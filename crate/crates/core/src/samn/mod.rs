//! Sample attention memory network.
//!
//! Training on one class-grouped batch runs:
//!
//! 1. feature extraction through layers `1..=K-1`,
//! 2. per-class sample attention `X <- softmax(X Xᵀ) X`, `blocknum` times,
//! 3. per-class batch means `X̄ᶜ`,
//! 4. the memory block `hᶜ <- sigmoid(hᶜ Wʰ + bʰ + X̄ᶜ Wˣ + bˣ)`,
//!    `Sᶜ <- tanh(hᶜ Wˢ + bˢ)`,
//! 5. the last extraction layer on the attended features, giving `mᵢ`,
//! 6. `L = L_inner + L_inter`, where `L_inner` is cross-entropy over the
//!    softmax of `cos(mᵢ, Sᶜ)` and `L_inter` the mean pairwise cosine between
//!    prototypes.
//!
//! The memory `hᶜ` persists across batches and epochs; gradients do not flow
//! through the previous batch's memory. At inference a sample goes through all
//! `K` layers and takes the class of its most cosine-similar prototype.

mod layers;
mod model;
mod params;

use serde::{Deserialize, Serialize};

pub use layers::{
    attention_weights, class_means, extract, forward_batch, inner_loss, inter_loss, memory_update,
    sample_attention, sample_attention_block, BatchForward, EncodedBatch, MemoryVars, ParamVars,
};
pub use model::{Prediction, PrototypeState, SamnModel, TrainedSamn};
pub use params::{Dense, MemoryParams, SamnParams};

use crate::numerics::{NumericsError, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    /// Default: with width-n layers relu units die and collapse the angular
    /// spread that cosine classification relies on.
    #[default]
    Tanh,
}

impl Activation {
    pub fn apply<'t>(self, x: Var<'t>) -> Result<Var<'t>, NumericsError> {
        match self {
            Activation::Relu => x.relu(),
            Activation::Sigmoid => x.sigmoid(),
            Activation::Tanh => x.tanh(),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}

/// Full model or one of the two ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Full,
    /// No memory block: prototypes are the batch class means.
    San,
    /// No sample attention.
    Mbn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamnConfig {
    /// Total extraction layers `K`; attention sits after layer `K-1`.
    pub layers: usize,
    pub blocknum: usize,
    /// Neurons per layer; `None` means the input dimension.
    pub hidden_width: Option<usize>,
    pub activation: Activation,
    pub variant: Variant,
}

impl Default for SamnConfig {
    fn default() -> Self {
        SamnConfig {
            layers: 3,
            blocknum: 1,
            hidden_width: None,
            activation: Activation::Tanh,
            variant: Variant::Full,
        }
    }
}

impl SamnConfig {
    pub fn with_variant(variant: Variant) -> Self {
        SamnConfig {
            variant,
            ..Self::default()
        }
    }

    /// Layers applied before attention (`k0 = K - 1`).
    pub fn pre_attention_layers(&self) -> usize {
        self.layers - 1
    }

    /// Attention blocks actually run; MBN never attends.
    pub fn attention_blocks(&self) -> usize {
        match self.variant {
            Variant::Mbn => 0,
            _ => self.blocknum,
        }
    }

    pub fn has_memory(&self) -> bool {
        self.variant != Variant::San
    }

    pub fn width_for(&self, n_features: usize) -> usize {
        self.hidden_width.unwrap_or(n_features)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 2 {
            return Err(Error::Config(format!(
                "need at least 2 extraction layers so that 1 <= k0 < K, got K={}",
                self.layers
            )));
        }
        if self.blocknum == 0 && self.variant != Variant::Mbn {
            return Err(Error::Config(
                "blocknum 0 is only valid for the MBN variant".into(),
            ));
        }
        if self.hidden_width == Some(0) {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        Ok(())
    }
}
