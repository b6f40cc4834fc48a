use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::audio::{
    crop_or_pad, load_feature_file, load_wav, log_mel, normalize_utterance, Crop, FrameConfig, MelConfig,
    MelFilterbank,
};
use crate::corpus::{resolve_source, ManifestEntry};
use crate::error::{Error, Result};
use crate::model::InputNorm;
use crate::rng::substream;
use crate::{Features, NUM_LABELS};

/// Resolves manifest sources to feature sequences.
///
/// `.wav` sources go through the log-mel front end; anything else is read as
/// a binary feature file. Loaded sequences are normalized according to the
/// model's input policy and cached by path.
pub struct FeatureStore {
    root: PathBuf,
    filterbank: MelFilterbank<f32>,
    frames: FrameConfig,
    norm: InputNorm,
    cache: Option<RwLock<HashMap<PathBuf, Arc<Features>>>>,
}

impl FeatureStore {
    pub fn new(manifest_dir: impl Into<PathBuf>, norm: InputNorm) -> Result<Self> {
        Ok(Self {
            root: manifest_dir.into(),
            filterbank: MelFilterbank::new(&MelConfig::default())?,
            frames: FrameConfig::default(),
            norm,
            cache: Some(RwLock::new(HashMap::new())),
        })
    }

    /// Reads sources on every request instead of keeping them in memory.
    pub fn uncached(mut self) -> Self {
        self.cache = None;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_of(&self, entry: &ManifestEntry) -> PathBuf {
        resolve_source(&self.root, entry)
    }

    /// Features exactly as stored or extracted, without normalization.
    pub fn load_raw(&self, entry: &ManifestEntry) -> Result<Features> {
        let path = self.path_of(entry);
        let is_wav = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
        let loaded = if is_wav {
            load_wav::<f32>(&path).and_then(|w| log_mel(&w, &self.filterbank, &self.frames))
        } else {
            load_feature_file(&path)
        };
        loaded.map_err(|e| Error::data(&entry.id, e))
    }

    /// Features after the input normalization policy.
    pub fn load(&self, entry: &ManifestEntry) -> Result<Arc<Features>> {
        let path = self.path_of(entry);
        if let Some(cache) = &self.cache {
            if let Some(f) = cache.read().expect("feature cache poisoned").get(&path) {
                return Ok(Arc::clone(f));
            }
        }
        let raw = self.load_raw(entry)?;
        let f = Arc::new(match self.norm {
            InputNorm::None => raw,
            InputNorm::Utterance => normalize_utterance(&raw),
        });
        if let Some(cache) = &self.cache {
            cache
                .write()
                .expect("feature cache poisoned")
                .insert(path, Arc::clone(&f));
        }
        Ok(f)
    }

    /// Loads every entry in parallel; returns the first failure in entry order.
    pub fn preload(&self, entries: &[ManifestEntry]) -> Result<Vec<Arc<Features>>> {
        entries.par_iter().map(|e| self.load(e)).collect()
    }
}

/// One training or evaluation batch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub ids: Vec<String>,
    /// Positions of the samples in the entry list the batch was drawn from.
    pub indices: Vec<usize>,
    pub features: Vec<Features>,
    /// `B x 8` binary targets in canonical label order.
    pub targets: Array2<f32>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Sample order for one epoch, a permutation keyed by `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, "epoch-order", &[epoch]));
    order
}

/// Builds the batch for `indices`.
///
/// With `crop_seed = Some((seed, epoch))` long sequences get a random window
/// drawn from a stream keyed by `(seed, epoch, index)`, so the result does
/// not depend on worker scheduling. With `None` the first window is used.
pub fn assemble_batch(
    entries: &[ManifestEntry],
    indices: &[usize],
    store: &FeatureStore,
    target_frames: usize,
    crop_seed: Option<(u64, u64)>,
) -> Result<Batch> {
    let features = indices
        .par_iter()
        .map(|&i| {
            let f = store.load(&entries[i])?;
            let cropped = match crop_seed {
                Some((seed, epoch)) => {
                    let mut rng = substream(seed, "crop", &[epoch, i as u64]);
                    crop_or_pad(&f, target_frames, Crop::Random(&mut rng))
                }
                None => crop_or_pad(&f, target_frames, Crop::Head),
            };
            cropped.map_err(|e| Error::data(&entries[i].id, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut targets = Array2::zeros((indices.len(), NUM_LABELS));
    for (row, &i) in indices.iter().enumerate() {
        for (k, y) in entries[i].label.targets::<f32>().into_iter().enumerate() {
            targets[[row, k]] = y;
        }
    }
    Ok(Batch {
        ids: indices.iter().map(|&i| entries[i].id.clone()).collect(),
        indices: indices.to_vec(),
        features,
        targets,
    })
}

/// All batches of one training epoch. The final batch may be smaller.
pub fn make_batches(
    entries: &[ManifestEntry],
    store: &FeatureStore,
    batch_size: usize,
    target_frames: usize,
    seed: u64,
    epoch: u64,
) -> Result<Vec<Batch>> {
    if entries.is_empty() {
        return Err(Error::EmptyInput("no entries to batch".into()));
    }
    if batch_size == 0 {
        return Err(Error::config("batch_size", "must be at least 1"));
    }
    epoch_order(entries.len(), seed, epoch)
        .chunks(batch_size)
        .map(|idx| assemble_batch(entries, idx, store, target_frames, Some((seed, epoch))))
        .collect()
}
