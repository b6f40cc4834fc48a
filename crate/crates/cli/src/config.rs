use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

/// Settings read from a `--config` TOML file. Every field is optional;
/// flags override them and defaults fill the rest.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub synth: SynthFile,
    #[serde(default)]
    pub train: TrainFile,
    #[serde(default)]
    pub model: ModelFile,
    #[serde(default)]
    pub augment: AugmentFile,
    #[serde(default)]
    pub eval: EvalFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFile {
    pub per_combo: Option<usize>,
    pub eval_per_combo: Option<usize>,
    pub duration: Option<f64>,
    pub rough_fraction: Option<f64>,
    pub utterances_per_speaker: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub adam_eps: Option<f64>,
    pub weight_decay: Option<f64>,
    pub grad_clip: Option<f64>,
    pub crop_seconds: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub d_model: Option<usize>,
    pub n_layers: Option<usize>,
    pub n_heads: Option<usize>,
    pub ffn_dim: Option<usize>,
    pub input_dim: Option<usize>,
    pub dropout: Option<f64>,
    pub input_norm: Option<stylemlc::model::InputNorm>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentFile {
    pub budget_hours: Option<f64>,
    pub k: Option<usize>,
    pub pool_seconds: Option<f64>,
    pub item_seconds: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalFile {
    pub threshold: Option<f64>,
    pub agreement_split: Option<u32>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
