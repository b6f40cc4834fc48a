use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::audio::save_feature_file;
use crate::augment::plan::speaker_labels;
use crate::augment::{build_pool, knn_convert, AugmentationPlan, FramePool};
use crate::corpus::{ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::train::FeatureStore;

/// Outcome of running a plan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExecutionReport {
    /// New manifest entries in plan order. Sources are file names relative
    /// to the output directory.
    pub entries: Vec<ManifestEntry>,
    /// `(output id, reason)` for items that could not be produced.
    pub skipped: Vec<(String, String)>,
}

/// One `output_id<TAB>reason` line per skipped item.
pub fn format_skip_report(skipped: &[(String, String)]) -> String {
    skipped
        .iter()
        .map(|(id, why)| format!("{id}\t{}\n", why.replace(['\t', '\n'], " ")))
        .collect()
}

/// Converts every planned item and writes `<output_id>.feat` into `out_dir`.
///
/// Pools are built from each target speaker's recorded training entries,
/// read raw (before input normalization). Failures skip the item and are
/// reported; they do not abort the run.
pub fn execute_plan(
    plan: &AugmentationPlan,
    entries: &[ManifestEntry],
    store: &FeatureStore,
    k: usize,
    pool_seconds: f64,
    out_dir: &Path,
) -> Result<ExecutionReport> {
    if plan.is_empty() {
        return Ok(ExecutionReport::default());
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let by_id: HashMap<&str, &ManifestEntry> = entries.iter().map(|e| (e.id.as_str(), e)).collect();
    let labels: HashMap<String, _> = speaker_labels(entries).into_iter().collect();

    let mut speakers: Vec<&str> = plan.items.iter().map(|it| it.target_speaker.as_str()).collect();
    speakers.sort_unstable();
    speakers.dedup();
    let pools: HashMap<&str, std::result::Result<FramePool, String>> = speakers
        .par_iter()
        .map(|&s| {
            let pool = entries
                .iter()
                .filter(|e| e.speaker_id == s && e.split == Split::Train && !e.excluded && !e.augmented)
                .map(|e| store.load_raw(e))
                .collect::<Result<Vec<_>>>()
                .and_then(|seqs| build_pool(s, &seqs, pool_seconds))
                .map_err(|e| format!("pool for {s}: {e}"));
            (s, pool)
        })
        .collect();

    let results: Vec<std::result::Result<ManifestEntry, String>> = plan
        .items
        .par_iter()
        .map(|it| {
            let pool = pools[it.target_speaker.as_str()].as_ref().map_err(Clone::clone)?;
            let label = *labels
                .get(&it.target_speaker)
                .ok_or_else(|| format!("unknown target speaker {}", it.target_speaker))?;
            let src = by_id
                .get(it.source_id.as_str())
                .ok_or_else(|| format!("unknown source {}", it.source_id))?;
            let file = format!("{}.feat", it.output_id);
            store
                .load_raw(src)
                .and_then(|f| knn_convert(&f, pool, k))
                .and_then(|f| save_feature_file(out_dir.join(&file), &f))
                .map_err(|e| e.to_string())?;
            Ok(ManifestEntry {
                id: it.output_id.clone(),
                source: file,
                speaker_id: it.target_speaker.clone(),
                split: Split::Train,
                label,
                excluded: false,
                augmented: true,
            })
        })
        .collect();

    let mut report = ExecutionReport::default();
    for (it, r) in plan.items.iter().zip(results) {
        match r {
            Ok(e) => report.entries.push(e),
            Err(why) => report.skipped.push((it.output_id.clone(), why)),
        }
    }
    Ok(report)
}
