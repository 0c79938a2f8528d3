use serde::{Deserialize, Serialize};

use super::{Matrix, NumericsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Adam with bias-corrected moments. One accumulator pair per parameter matrix.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl Adam {
    pub fn new(config: AdamConfig, shapes: &[(usize, usize)]) -> Result<Self, NumericsError> {
        if !(config.learning_rate > 0.0) || !config.learning_rate.is_finite() {
            return Err(NumericsError::InvalidLearningRate(config.learning_rate));
        }
        Ok(Adam {
            config,
            step: 0,
            first: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            second: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
        })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn step(
        &mut self,
        params: &mut [&mut Matrix],
        grads: &[Matrix],
    ) -> Result<(), NumericsError> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(NumericsError::ParameterCount {
                expected: self.first.len(),
                found: params.len().min(grads.len()),
            });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(NumericsError::DimensionMismatch {
                    op: "adam_step",
                    left: p.shape(),
                    right: g.shape(),
                });
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);

        for (i, param) in params.iter_mut().enumerate() {
            let g = grads[i].as_slice();
            let m = self.first[i].as_mut_slice();
            let v = self.second[i].as_mut_slice();
            for (k, p) in param.as_mut_slice().iter_mut().enumerate() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / correction1;
                let v_hat = v[k] / correction2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(NumericsError::NonFinite {
                op: "adam_step".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = Matrix::row_vector(&[1.5, -2.0]);
        let mut adam = Adam::new(AdamConfig::default(), &[(1, 2)]).unwrap();
        for _ in 0..3 {
            adam.step(&mut [&mut p], &[Matrix::zeros(1, 2)]).unwrap();
        }
        assert_eq!(p, Matrix::row_vector(&[1.5, -2.0]));
        assert_eq!(adam.step_count(), 3);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = Matrix::scalar(0.0);
        let mut adam = Adam::new(AdamConfig::with_learning_rate(0.01), &[(1, 1)]).unwrap();
        adam.step(&mut [&mut p], &[Matrix::scalar(1.0)]).unwrap();
        assert!((p.item() + 0.01).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_learning_rate() {
        for lr in [0.0, -1.0, f64::NAN] {
            assert!(Adam::new(AdamConfig::with_learning_rate(lr), &[]).is_err());
        }
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut p = Matrix::zeros(2, 2);
        let mut adam = Adam::new(AdamConfig::default(), &[(2, 2)]).unwrap();
        assert!(adam.step(&mut [&mut p], &[Matrix::zeros(1, 2)]).is_err());
        assert_eq!(adam.step_count(), 0);
    }
}
