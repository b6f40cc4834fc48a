use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stylemlc::Label;

/// Speaking-style classification: corpus synthesis, features, augmentation,
/// training and evaluation.
///
/// Settings resolve as: command-line flag, then the `--config` file, then
/// the built-in default shown in each subcommand's help.
#[derive(Debug, Parser)]
#[command(name = "stylemlc", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Root seed for every random choice [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for data-parallel stages [default: all cores]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// TOML file with settings (top-level `seed`/`workers`, and
    /// `[synth]`, `[train]`, `[model]`, `[augment]`, `[eval]` tables)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic corpus (wav files plus manifest.tsv)
    Synth(SynthArgs),
    /// Extract 80-channel log-mel features from wav files
    Featurize(FeaturizeArgs),
    /// Add kNN-converted samples for under-represented labels
    Augment(AugmentArgs),
    /// Train a model on the train split of a manifest
    Train(TrainArgs),
    /// Score a checkpoint on the eval split of a manifest
    Eval(EvalArgs),
}

/// Output directory flag; falls back to `$STYLEMLC_OUT/<subcommand>`.
#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory [default: $STYLEMLC_OUT/<subcommand>]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub out: OutArg,
    /// Training samples per style combination (16 combinations) [default: 10]
    #[arg(long)]
    pub per_combo: Option<usize>,
    /// Held-out samples per style combination [default: 0]
    #[arg(long)]
    pub eval_per_combo: Option<usize>,
    /// Seconds per sample [default: 5]
    #[arg(long)]
    pub duration: Option<f64>,
    /// Fraction of training samples kept for Rough combinations [default: 1]
    #[arg(long)]
    pub rough_fraction: Option<f64>,
    /// Utterances grouped under one synthetic speaker [default: 4]
    #[arg(long)]
    pub utterances_per_speaker: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub out: OutArg,
    /// Manifest whose wav sources are converted; a rewritten manifest
    /// pointing at the feature files is written next to them
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Individual wav files
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub out: OutArg,
    /// Input manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Total hours of generated material [default: 14]
    #[arg(long)]
    pub budget_hours: Option<f64>,
    /// Neighbours averaged per output frame [default: 4]
    #[arg(long)]
    pub k: Option<usize>,
    /// Seconds of target-speaker speech in each frame pool [default: 60]
    #[arg(long)]
    pub pool_seconds: Option<f64>,
    /// Seconds charged to the budget per generated item [default: 5]
    #[arg(long)]
    pub item_seconds: Option<f64>,
    /// Target count per label, e.g. `Rough=400`; repeatable
    /// [default: each label lifted to the count of its opposite]
    #[arg(long = "target", value_parser = parse_target)]
    pub targets: Vec<(Label, usize)>,
}

fn parse_target(s: &str) -> Result<(Label, usize), String> {
    let (l, n) = s.split_once('=').ok_or_else(|| format!("expected LABEL=COUNT, got `{s}`"))?;
    let label = l.trim().parse::<Label>().map_err(|e| e.to_string())?;
    let n = n.trim().parse().map_err(|_| format!("bad count `{n}`"))?;
    Ok((label, n))
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub out: OutArg,
    /// Training manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Passes over the training split [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Adam learning rate [default: 0.0001]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Samples per batch [default: 64]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Decoder layers [default: 4]
    #[arg(long)]
    pub layers: Option<usize>,
    /// Attention heads [default: 8]
    #[arg(long)]
    pub heads: Option<usize>,
    /// Model dimension [default: 128]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Feed-forward hidden size [default: 512]
    #[arg(long)]
    pub ffn_dim: Option<usize>,
    /// Input feature dimension [default: 80]
    #[arg(long)]
    pub input_dim: Option<usize>,
    /// Crop length in seconds; shorter inputs are zero-padded [default: 5]
    #[arg(long)]
    pub crop_seconds: Option<f64>,
    /// Dropout on sublayer outputs [default: 0]
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Adam beta1 [default: 0.9]
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Adam beta2 [default: 0.999]
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Adam epsilon [default: 1e-8]
    #[arg(long)]
    pub adam_eps: Option<f64>,
    /// Skip the per-epoch checkpoints and keep only final.ckpt
    #[arg(long)]
    pub final_only: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Checkpoint to score
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Manifest holding the eval split
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the JSON report [default: stdout]
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Decision threshold on sigmoid outputs [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Annotator agreement at or above this forms the high stratum [default: 5]
    #[arg(long)]
    pub agreement_split: Option<u32>,
    /// Report only detection probabilities for these labels, e.g. `Dark,Bright`
    #[arg(long, value_delimiter = ',')]
    pub detect_only: Option<Vec<Label>>,
}
