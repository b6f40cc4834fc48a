use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::corpus::{Label, LabelVector, ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::NUM_LABELS;

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOptions {
    /// Desired number of positive training entries per label; `None`
    /// leaves the label alone.
    pub target_counts: [Option<usize>; NUM_LABELS],
    pub budget_s: f64,
    /// Duration charged against the budget for each generated item.
    pub item_seconds: f64,
    pub seed: u64,
}

impl PlanOptions {
    pub fn new(target_counts: [Option<usize>; NUM_LABELS]) -> Self {
        Self {
            target_counts,
            budget_s: super::DEFAULT_BUDGET_HOURS * 3600.0,
            item_seconds: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanItem {
    pub source_id: String,
    pub target_speaker: String,
    pub output_id: String,
    /// The deficient label this item was planned for.
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentationPlan {
    pub items: Vec<PlanItem>,
    pub target_counts: [Option<usize>; NUM_LABELS],
    pub budget_hours: f64,
    pub item_seconds: f64,
}

impl AugmentationPlan {
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn planned_hours(&self) -> f64 {
        self.items.len() as f64 * self.item_seconds / 3600.0
    }
}

fn usable(e: &ManifestEntry) -> bool {
    e.split == Split::Train && !e.excluded
}

/// Positive training entries per label, augmented ones included.
pub fn label_counts(entries: &[ManifestEntry]) -> [usize; NUM_LABELS] {
    let mut counts = [0; NUM_LABELS];
    for e in entries.iter().filter(|e| usable(e)) {
        for l in e.label.positives() {
            counts[l.index()] += 1;
        }
    }
    counts
}

/// Targets that lift each label to the count of its opposite
/// (Rough to Smooth, Female to Male, and so on).
pub fn balance_targets(entries: &[ManifestEntry]) -> [Option<usize>; NUM_LABELS] {
    let c = label_counts(entries);
    std::array::from_fn(|k| Some(c[k].max(c[Label::ALL[k].opposite().index()])))
}

/// Recorded speakers in order of first appearance, each with the label
/// vector of their first training entry.
pub(crate) fn speaker_labels(entries: &[ManifestEntry]) -> Vec<(String, LabelVector)> {
    let mut seen = HashSet::new();
    entries
        .iter()
        .filter(|e| usable(e) && !e.augmented)
        .filter(|e| seen.insert(e.speaker_id.clone()))
        .map(|e| (e.speaker_id.clone(), e.label))
        .collect()
}

/// Greedy deficit-driven pairing of source utterances with target speakers.
///
/// Deficient labels are handled in canonical order. For each, the eligible
/// target speakers (those carrying the label) are visited round-robin in a
/// seeded order; each takes its best unused source, where sources agreeing
/// with the target on more of the other labels rank first. Every planned
/// item counts towards all of its target's labels. Planning stops when
/// each deficit is filled, the sources run out, or the budget is spent.
pub fn plan_augmentation(entries: &[ManifestEntry], opts: &PlanOptions) -> Result<AugmentationPlan> {
    if !(opts.budget_s > 0.0) {
        return Err(Error::Parameter(format!("budget must be positive, got {} s", opts.budget_s)));
    }
    if !(opts.item_seconds > 0.0) {
        return Err(Error::Parameter(format!("item duration must be positive, got {} s", opts.item_seconds)));
    }
    let max_items = (opts.budget_s / opts.item_seconds + 1e-9).floor() as usize;
    let sources: Vec<&ManifestEntry> = entries.iter().filter(|e| usable(e) && !e.augmented).collect();
    let speakers = speaker_labels(entries);
    let ids: HashSet<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    let mut counts = label_counts(entries);
    let mut items: Vec<PlanItem> = Vec::new();

    for label in Label::ALL {
        let Some(target) = opts.target_counts[label.index()] else {
            continue;
        };
        if counts[label.index()] >= target || items.len() >= max_items {
            continue;
        }
        let mut eligible: Vec<&(String, LabelVector)> = speakers.iter().filter(|(_, lv)| lv.has(label)).collect();
        if eligible.is_empty() {
            return Err(Error::Planning {
                label: label.to_string(),
                message: "no target speaker carries this label".into(),
            });
        }
        eligible.shuffle(&mut substream(opts.seed, "augment-targets", &[label.index() as u64]));

        let mut queues: Vec<std::vec::IntoIter<usize>> = eligible
            .iter()
            .enumerate()
            .map(|(t, (speaker, lv))| {
                let mut order: Vec<usize> = (0..sources.len()).collect();
                order.shuffle(&mut substream(opts.seed, "augment-sources", &[label.index() as u64, t as u64]));
                let key = |i: usize| {
                    let s = &sources[i].label;
                    let agree = (0..NUM_LABELS)
                        .filter(|&k| k != label.index() && k != label.opposite().index())
                        .filter(|&k| s.labels()[k] == lv.labels()[k])
                        .count();
                    (std::cmp::Reverse(agree), s.has(label))
                };
                order.retain(|&i| sources[i].speaker_id != *speaker);
                order.sort_by_key(|&i| key(i));
                order.into_iter()
            })
            .collect();

        let mut exhausted = vec![false; eligible.len()];
        let mut turn = 0;
        while counts[label.index()] < target && items.len() < max_items && exhausted.iter().any(|x| !x) {
            let t = turn % eligible.len();
            turn += 1;
            let Some(i) = queues[t].next() else {
                exhausted[t] = true;
                continue;
            };
            let (speaker, lv) = eligible[t];
            let output_id = format!("aug{:05}_{}_to_{}", items.len(), sources[i].id, speaker);
            if ids.contains(output_id.as_str()) {
                return Err(Error::Planning {
                    label: label.to_string(),
                    message: format!("output id {output_id} already exists in the manifest"),
                });
            }
            for l in lv.positives() {
                counts[l.index()] += 1;
            }
            items.push(PlanItem {
                source_id: sources[i].id.clone(),
                target_speaker: speaker.clone(),
                output_id,
                label,
            });
        }
    }
    Ok(AugmentationPlan {
        items,
        target_counts: opts.target_counts,
        budget_hours: opts.budget_s / 3600.0,
        item_seconds: opts.item_seconds,
    })
}
