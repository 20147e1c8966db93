//! Adam in the gradient-ascent convention.
//!
//! Every training loop in this crate maximizes a mean log-likelihood, so the
//! update direction is `+rate * m_hat / (sqrt(v_hat) + eps)`. Loss-minimizing
//! callers negate their gradients.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_rate(rate: f64) -> Self {
        AdamConfig {
            rate,
            ..AdamConfig::default()
        }
    }
}

/// Per-parameter first/second moment state for one flattened parameter set.
#[derive(Debug, Clone)]
pub struct AdamState {
    first: Vec<f64>,
    second: Vec<f64>,
    step: u64,
    config: AdamConfig,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState {
            first: vec![0.0; len],
            second: vec![0.0; len],
            step: 0,
            config,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// One bias-corrected ascent step over a parameter set split into blocks.
    /// Block shapes must match between `params` and `grads`, and their total
    /// length must equal the state length.
    pub fn ascend(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::usage(format!(
                "adam: {} parameter blocks vs {} gradient blocks",
                params.len(),
                grads.len()
            )));
        }
        let total: usize = params.iter().map(|b| b.len()).sum();
        if total != self.first.len() {
            return Err(Error::usage(format!(
                "adam: parameter length {} does not match state length {}",
                total,
                self.first.len()
            )));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.len() != g.len() {
                return Err(Error::usage(format!(
                    "adam: block length mismatch ({} vs {})",
                    p.len(),
                    g.len()
                )));
            }
            if !g.iter().all(|v| v.is_finite()) {
                return Err(Error::numeric("adam: non-finite gradient"));
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let AdamConfig {
            rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);

        let mut offset = 0;
        for (block, grad) in params.iter_mut().zip(grads) {
            for (i, (p, &g)) in block.iter_mut().zip(grad.iter()).enumerate() {
                let j = offset + i;
                self.first[j] = beta1 * self.first[j] + (1.0 - beta1) * g;
                self.second[j] = beta2 * self.second[j] + (1.0 - beta2) * g * g;
                let m_hat = self.first[j] / bias1;
                let v_hat = self.second[j] / bias2;
                *p += rate * m_hat / (v_hat.sqrt() + epsilon);
            }
            offset += block.len();
        }
        Ok(())
    }

    /// Convenience for a single contiguous parameter vector.
    pub fn ascend_flat(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.ascend(&mut [params], &[grads])
    }
}
