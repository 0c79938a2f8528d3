use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamnConfig;
pub use crate::numerics::Dense;
use crate::numerics::Matrix;

/// The three affine maps of the memory block (`f_h`, `f_x`, `f_o`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    pub hidden: Dense,
    pub input: Dense,
    pub output: Dense,
}

/// All trainable weights. `memory` is `None` for the SAN ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamnParams {
    pub layers: Vec<Dense>,
    pub memory: Option<MemoryParams>,
}

impl SamnParams {
    pub fn init<R: Rng + ?Sized>(config: &SamnConfig, n_features: usize, rng: &mut R) -> Self {
        let width = config.width_for(n_features);
        let layers = (0..config.layers)
            .map(|j| Dense::glorot(if j == 0 { n_features } else { width }, width, rng))
            .collect();
        let memory = config.has_memory().then(|| MemoryParams {
            hidden: Dense::glorot(width, width, rng),
            input: Dense::glorot(width, width, rng),
            output: Dense::glorot(width, width, rng),
        });
        SamnParams { layers, memory }
    }

    pub fn width(&self) -> usize {
        self.layers.last().map_or(0, Dense::fan_out)
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, Dense::fan_in)
    }

    /// Parameter matrices in a fixed order: layer weights and biases, then
    /// the memory block's (W^h, b^h, W^x, b^x, W^s, b^s).
    pub fn matrices(&self) -> Vec<&Matrix> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        if let Some(m) = &self.memory {
            for d in [&m.hidden, &m.input, &m.output] {
                out.push(&d.weight);
                out.push(&d.bias);
            }
        }
        out
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        if let Some(m) = &mut self.memory {
            for d in [&mut m.hidden, &mut m.input, &mut m.output] {
                out.push(&mut d.weight);
                out.push(&mut d.bias);
            }
        }
        out
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.matrices().iter().map(|m| m.shape()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.matrices().iter().all(|m| m.is_finite())
    }
}
