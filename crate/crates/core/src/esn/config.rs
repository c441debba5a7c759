use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EsnConfig {
    pub n_nodes: usize,
    pub input_dim: usize,
    /// Probability that a recurrent connection exists (0.2 = 80% sparsity).
    pub connection_prob: f64,
    pub spectral_radius_target: f64,
    /// Leak rate; 1.0 gives the plain non-leaky update.
    pub leak_rate: f64,
    pub input_scale: f64,
    pub bias_scale: f64,
    pub seed: u64,
}

impl Default for EsnConfig {
    fn default() -> Self {
        Self {
            n_nodes: 400,
            input_dim: 1,
            connection_prob: 0.2,
            spectral_radius_target: 0.95,
            leak_rate: 0.3,
            input_scale: 0.5,
            bias_scale: 0.0,
            seed: 0,
        }
    }
}

impl EsnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 || self.input_dim == 0 {
            return Err(Error::arg("reservoir needs at least one node and one input"));
        }
        if !(self.connection_prob > 0.0 && self.connection_prob <= 1.0) {
            return Err(Error::arg(format!("connection_prob must lie in (0, 1], got {}", self.connection_prob)));
        }
        if !(self.spectral_radius_target > 0.0 && self.spectral_radius_target < 1.0) {
            return Err(Error::arg(format!(
                "spectral radius target must lie in (0, 1), got {}",
                self.spectral_radius_target
            )));
        }
        if !(self.leak_rate > 0.0 && self.leak_rate <= 1.0) {
            return Err(Error::arg(format!("leak rate must lie in (0, 1], got {}", self.leak_rate)));
        }
        if !(self.input_scale >= 0.0 && self.input_scale.is_finite() && self.bias_scale >= 0.0 && self.bias_scale.is_finite()) {
            return Err(Error::arg("input and bias scales must be finite and non-negative"));
        }
        Ok(())
    }
}
