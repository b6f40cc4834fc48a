use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimizer and schedule settings. Crop length comes from
/// [`ModelConfig::target_frames`](crate::ModelConfig).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub seed: u64,
    /// L2 penalty folded into the gradient. Off by default.
    pub weight_decay: f64,
    /// Global gradient-norm ceiling. Off by default.
    pub grad_clip: Option<f64>,
    /// Write `epoch_{i}.ckpt` after every epoch, not only the final one.
    pub epoch_checkpoints: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 64,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 30,
            seed: 0,
            weight_decay: 0.0,
            grad_clip: None,
            epoch_checkpoints: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be a finite non-negative number"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(name, "must lie in [0, 1)"));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::config("adam_eps", "must be positive"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("weight_decay", "must be non-negative"));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::config("grad_clip", "must be positive when set"));
            }
        }
        Ok(())
    }
}
