use std::fs;
use std::path::Path;

use ndarray::{s, Array2};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corpus::{parse_manifest, Label, ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::eval::{binarize, confusion, detection_probability, f1, macro_f1, stratified_f1, ConfusionCounts};
use crate::model::{forward, predict, read_checkpoint};
use crate::train::{assemble_batch, FeatureStore};
use crate::{Params, NUM_LABELS};

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_VOTE_SPLIT: u32 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub threshold: f64,
    /// Agreement at or above this is the high stratum.
    pub vote_split: u32,
    /// Report only detection probabilities, for these labels.
    pub detect_only: Option<Vec<Label>>,
    /// Samples per forward pass.
    pub batch_size: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            vote_split: DEFAULT_VOTE_SPLIT,
            detect_only: None,
            batch_size: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelBlock {
    pub label: Label,
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl LabelBlock {
    fn new(label: Label, counts: ConfusionCounts) -> Self {
        Self {
            label,
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: f1(&counts),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumBlock {
    pub label: Label,
    pub low: Option<LabelBlock>,
    pub high: Option<LabelBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionBlock {
    pub label: Label,
    pub probability: f64,
}

/// Everything measured in one evaluation. Serializes to a stable JSON
/// schema; absent sections are omitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub checkpoint: String,
    pub threshold: f64,
    pub vote_split: u32,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<LabelBlock>>,
    /// Unweighted over all eight labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_f1: Option<f64>,
    /// Unweighted over labels that occur as a target or a prediction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub macro_f1_present: Option<f64>,
    pub detection: Vec<DetectionBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strata: Option<Vec<StratumBlock>>,
}

impl MetricsReport {
    /// Metrics from `B x 8` probabilities for `entries` (row-aligned).
    pub fn compute(entries: &[ManifestEntry], probabilities: &Array2<f64>, opts: &EvalOptions, checkpoint: &str) -> Result<Self> {
        if !(opts.threshold > 0.0 && opts.threshold < 1.0) {
            return Err(Error::config("threshold", format!("must lie in (0, 1), got {}", opts.threshold)));
        }
        if probabilities.dim() != (entries.len(), NUM_LABELS) {
            return Err(Error::Contract(format!(
                "{:?} probabilities for {} entries",
                probabilities.dim(),
                entries.len()
            )));
        }
        let detect_labels: Vec<Label> = opts.detect_only.clone().unwrap_or_else(|| Label::ALL.to_vec());
        let detection = detect_labels
            .iter()
            .map(|&l| {
                Ok(DetectionBlock {
                    label: l,
                    probability: detection_probability(probabilities.column(l.index()), opts.threshold)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut report = Self {
            checkpoint: checkpoint.to_string(),
            threshold: opts.threshold,
            vote_split: opts.vote_split,
            samples: entries.len(),
            labels: None,
            macro_f1: None,
            macro_f1_present: None,
            detection,
            strata: None,
        };
        if opts.detect_only.is_some() {
            return Ok(report);
        }

        let preds = binarize(probabilities, opts.threshold);
        let mut targets = Array2::<f64>::zeros((entries.len(), NUM_LABELS));
        for (b, e) in entries.iter().enumerate() {
            for (k, y) in e.label.targets::<f64>().into_iter().enumerate() {
                targets[[b, k]] = y;
            }
        }
        let blocks: Vec<LabelBlock> = confusion(preds.view(), targets.view())
            .into_iter()
            .zip(Label::ALL)
            .map(|(c, l)| LabelBlock::new(l, c))
            .collect();
        let scores: Vec<f64> = blocks.iter().map(|b| b.f1).collect();
        let present: Vec<f64> = blocks
            .iter()
            .filter(|b| b.counts.tp + b.counts.fp + b.counts.fn_ > 0)
            .map(|b| b.f1)
            .collect();
        let strata = stratified_f1(entries, preds.view(), opts.vote_split);
        report.macro_f1 = Some(macro_f1(&scores));
        report.macro_f1_present = Some(macro_f1(&present));
        report.labels = Some(blocks);
        report.strata = Some(
            Label::ALL
                .iter()
                .map(|&l| StratumBlock {
                    label: l,
                    low: strata.low[l.index()].map(|c| LabelBlock::new(l, c)),
                    high: strata.high[l.index()].map(|c| LabelBlock::new(l, c)),
                })
                .collect(),
        );
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn f1_of(&self, label: Label) -> Option<f64> {
        self.labels.as_ref().map(|b| b[label.index()].f1)
    }
}

/// Hex SHA-256 of the checkpoint bytes.
pub fn checkpoint_id(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Sigmoid outputs for `entries`, using the first window of each.
pub fn predict_entries(params: &Params, entries: &[ManifestEntry], store: &FeatureStore, batch_size: usize) -> Result<Array2<f64>> {
    if batch_size == 0 {
        return Err(Error::config("batch_size", "must be at least 1"));
    }
    let mut out = Array2::zeros((entries.len(), params.config.n_labels));
    let all: Vec<usize> = (0..entries.len()).collect();
    for (c, idx) in all.chunks(batch_size).enumerate() {
        let batch = assemble_batch(entries, idx, store, params.config.target_frames, None)?;
        let (logits, _) = forward(params, &batch.features)?;
        let start = c * batch_size;
        out.slice_mut(s![start..start + idx.len(), ..])
            .assign(&predict(&logits).mapv(f64::from));
    }
    Ok(out)
}

/// Scores the eval split of `manifest` with the checkpoint and, when
/// `report_path` is given, writes the JSON report there.
pub fn evaluate(checkpoint: &Path, manifest: &Path, opts: &EvalOptions, report_path: Option<&Path>) -> Result<MetricsReport> {
    let bytes = fs::read(checkpoint).map_err(|e| Error::io(checkpoint, e))?;
    let params = read_checkpoint::<f32>(&bytes)?;
    if params.config.n_labels != NUM_LABELS {
        return Err(Error::config("n_labels", format!("expected {NUM_LABELS}, checkpoint has {}", params.config.n_labels)));
    }
    let entries: Vec<ManifestEntry> = parse_manifest(manifest)?
        .into_iter()
        .filter(|e| e.split == Split::Eval && !e.excluded)
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no usable eval entries", manifest.display())));
    }
    let root = manifest.parent().unwrap_or(Path::new("."));
    let store = FeatureStore::new(root, params.config.input_norm)?.uncached();
    let probs = predict_entries(&params, &entries, &store, opts.batch_size)?;
    let report = MetricsReport::compute(&entries, &probs, opts, &checkpoint_id(&bytes))?;
    if let Some(path) = report_path {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, report.to_json()).map_err(|e| Error::io(path, e))?;
    }
    Ok(report)
}
