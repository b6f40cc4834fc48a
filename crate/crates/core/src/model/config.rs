use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::NUM_LABELS;

/// How an utterance's features are scaled before cropping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputNorm {
    None,
    /// Subtract the utterance mean, divide by its standard deviation.
    Utterance,
}

impl InputNorm {
    pub(crate) fn code(self) -> u64 {
        match self {
            InputNorm::None => 0,
            InputNorm::Utterance => 1,
        }
    }

    pub(crate) fn from_code(c: u64) -> Result<Self> {
        match c {
            0 => Ok(InputNorm::None),
            1 => Ok(InputNorm::Utterance),
            _ => Err(Error::config("input_norm", format!("unknown code {c}"))),
        }
    }
}

/// Network shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub n_labels: usize,
    /// Feature dimension `D` of the input frames.
    pub input_dim: usize,
    pub ffn_dim: usize,
    /// Frames per input after crop/pad.
    pub target_frames: usize,
    /// Dropout on each sublayer output during training; 0 disables it.
    pub dropout: f64,
    pub input_norm: InputNorm,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 128,
            n_layers: 4,
            n_heads: 8,
            n_labels: NUM_LABELS,
            input_dim: 80,
            ffn_dim: 4 * 128,
            target_frames: 500,
            dropout: 0.0,
            input_norm: InputNorm::Utterance,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("d_model", self.d_model),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("n_labels", self.n_labels),
            ("input_dim", self.input_dim),
            ("ffn_dim", self.ffn_dim),
            ("target_frames", self.target_frames),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::config(
                "n_heads",
                format!("d_model {} is not divisible by {} heads", self.d_model, self.n_heads),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout", format!("{} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Field-by-field comparison; the error names the first mismatch.
    pub fn ensure_matches(&self, expected: &ModelConfig) -> Result<()> {
        for (field, a, b) in self.integer_fields().into_iter().zip(expected.integer_fields()).map(|((f, a), (_, b))| (f, a, b)) {
            if a != b {
                return Err(Error::config(field, format!("checkpoint has {a}, expected {b}")));
            }
        }
        if self.dropout != expected.dropout {
            return Err(Error::config("dropout", format!("checkpoint has {}, expected {}", self.dropout, expected.dropout)));
        }
        Ok(())
    }

    pub(crate) fn integer_fields(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("d_model", self.d_model as u64),
            ("n_layers", self.n_layers as u64),
            ("n_heads", self.n_heads as u64),
            ("n_labels", self.n_labels as u64),
            ("input_dim", self.input_dim as u64),
            ("ffn_dim", self.ffn_dim as u64),
            ("target_frames", self.target_frames as u64),
            ("input_norm", self.input_norm.code()),
        ]
    }
}
