use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::corpus::{parse_manifest, ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::model::{backward, forward_with_dropout, save_checkpoint, ModelConfig, ModelParameters};
use crate::rng::substream;
use crate::train::{adam_step, assemble_batch, bce_loss, epoch_order, AdamState, FeatureStore, TrainConfig};
use crate::{Params, NUM_LABELS};

pub const RUN_SUMMARY_FILE: &str = "run_summary.json";

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    /// Sample-weighted mean loss over the epoch's batches.
    pub mean_loss: f64,
    pub steps: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_checkpoint: PathBuf,
    pub epochs: Vec<EpochLog>,
    pub params: Params,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    manifest: String,
    train_samples: usize,
    parameters: usize,
    train: &'a TrainConfig,
    model: &'a ModelConfig,
    epochs: &'a [EpochLog],
    final_checkpoint: String,
    total_seconds: f64,
}

/// Runs `cfg.epochs` epochs of Adam on `entries`, updating `params`.
///
/// `on_epoch` sees each epoch's log and the parameters after it; an error
/// from it stops training.
pub fn fit(
    params: &mut Params,
    entries: &[ManifestEntry],
    store: &FeatureStore,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog, &Params) -> Result<()>,
) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    if entries.is_empty() {
        return Err(Error::EmptyInput("no training entries".into()));
    }
    if params.config.n_labels != NUM_LABELS {
        return Err(Error::config(
            "n_labels",
            format!("manifests carry {NUM_LABELS} labels, model has {}", params.config.n_labels),
        ));
    }
    let target_frames = params.config.target_frames;
    let mut state = AdamState::new(params);
    let mut logs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs as u64 {
        let started = Instant::now();
        let (mut loss_sum, mut seen, mut steps) = (0.0, 0usize, 0usize);
        for (step, idx) in epoch_order(entries.len(), cfg.seed, epoch)
            .chunks(cfg.batch_size)
            .enumerate()
        {
            let batch = assemble_batch(entries, idx, store, target_frames, Some((cfg.seed, epoch)))?;
            let mut dropout_rng = substream(cfg.seed, "dropout", &[epoch, step as u64]);
            let (logits, trace) = forward_with_dropout(params, &batch.features, Some(&mut dropout_rng))?;
            let (loss, dlogits) = bce_loss(&logits, &batch.targets)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("epoch {}, step {step}: loss is {loss}", epoch + 1)));
            }
            let grads = backward(params, &trace, &dlogits)?;
            adam_step(params, &grads, &mut state, cfg).map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("epoch {}, step {step}: {m}", epoch + 1)),
                other => other,
            })?;
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
            steps += 1;
        }
        let log = EpochLog {
            epoch: epoch as usize + 1,
            mean_loss: loss_sum / seen as f64,
            steps,
            seconds: started.elapsed().as_secs_f64(),
        };
        on_epoch(&log, params)?;
        logs.push(log);
    }
    Ok(logs)
}

/// [`train_with`] without a progress callback.
pub fn train(cfg: &TrainConfig, model_cfg: &ModelConfig, manifest: &Path, out: &Path) -> Result<TrainOutcome> {
    train_with(cfg, model_cfg, manifest, out, |_| {})
}

/// Trains a fresh model on the train split of `manifest`.
///
/// Every source is loaded and checked against the configured feature
/// dimension before the first step. Writes `epoch_{i}.ckpt` per epoch
/// (unless disabled), `final.ckpt`, and a JSON run summary into `out`.
pub fn train_with(
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    manifest: &Path,
    out: &Path,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    let started = Instant::now();
    cfg.validate()?;
    model_cfg.validate()?;
    let entries: Vec<ManifestEntry> = parse_manifest(manifest)?
        .into_iter()
        .filter(|e| e.split == Split::Train && !e.excluded)
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no usable train entries", manifest.display())));
    }
    let root = manifest.parent().unwrap_or(Path::new("."));
    let store = FeatureStore::new(root, model_cfg.input_norm)?;
    for (e, f) in entries.iter().zip(store.preload(&entries)?) {
        if f.dim() != model_cfg.input_dim {
            return Err(Error::config(
                "input_dim",
                format!("{} has {}-dimensional features, model expects {}", e.id, f.dim(), model_cfg.input_dim),
            ));
        }
    }

    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut params = ModelParameters::<f32>::init(model_cfg, cfg.seed)?;
    let epochs = fit(&mut params, &entries, &store, cfg, |log, p| {
        on_epoch(log);
        if cfg.epoch_checkpoints {
            save_checkpoint(p, out.join(format!("epoch_{}.ckpt", log.epoch)))?;
        }
        Ok(())
    })?;
    let final_checkpoint = out.join("final.ckpt");
    save_checkpoint(&params, &final_checkpoint)?;

    let summary = RunSummary {
        manifest: manifest.display().to_string(),
        train_samples: entries.len(),
        parameters: params.num_parameters(),
        train: cfg,
        model: model_cfg,
        epochs: &epochs,
        final_checkpoint: final_checkpoint.display().to_string(),
        total_seconds: started.elapsed().as_secs_f64(),
    };
    let path = out.join(RUN_SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

    Ok(TrainOutcome {
        final_checkpoint,
        epochs,
        params,
    })
}
