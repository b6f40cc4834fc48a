use std::ops::{Add, AddAssign};

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::Serialize;

use crate::corpus::ManifestEntry;
use crate::error::{Error, Result};
use crate::{Scalar, NUM_LABELS};

/// 1 where `p >= threshold`, else 0.
pub fn binarize<S: Scalar>(probabilities: &Array2<S>, threshold: S) -> Array2<S> {
    probabilities.mapv(|p| if p >= threshold { S::one() } else { S::zero() })
}

/// Confusion counts for one label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `tp / (tp + fp)`, 0 when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// `tp / (tp + fn)`, 0 when nothing is actually positive.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl Add for ConfusionCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Per-column confusion counts of binary predictions against binary
/// targets (both `B x K`, nonzero meaning positive).
pub fn confusion<S: Scalar>(predictions: ArrayView2<'_, S>, targets: ArrayView2<'_, S>) -> Vec<ConfusionCounts> {
    assert_eq!(predictions.dim(), targets.dim(), "prediction and target shapes differ");
    let mut out = vec![ConfusionCounts::default(); predictions.ncols()];
    for (p_row, t_row) in predictions.outer_iter().zip(targets.outer_iter()) {
        for (k, c) in out.iter_mut().enumerate() {
            c.record(p_row[k] != S::zero(), t_row[k] != S::zero());
        }
    }
    out
}

/// Harmonic mean of precision and recall; 0 whenever either is undefined
/// or both are zero.
pub fn f1(c: &ConfusionCounts) -> f64 {
    let (p, r) = (c.precision(), c.recall());
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Unweighted mean. An empty slice gives 0.
pub fn macro_f1(scores: &[f64]) -> f64 {
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

/// Fraction of samples whose probability reaches `threshold`.
pub fn detection_probability<S: Scalar>(probabilities: ArrayView1<'_, S>, threshold: S) -> Result<f64> {
    if probabilities.is_empty() {
        return Err(Error::UndefinedRatio("no samples to detect over".into()));
    }
    let hits = probabilities.iter().filter(|&&p| p >= threshold).count();
    Ok(hits as f64 / probabilities.len() as f64)
}

/// Confusion counts per label, split by annotator agreement.
///
/// `None` marks an empty stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct Strata {
    pub low: [Option<ConfusionCounts>; NUM_LABELS],
    pub high: [Option<ConfusionCounts>; NUM_LABELS],
}

/// For each label, entries with agreement at or above `vote_split` form the
/// high stratum and the rest the low one. Agreement counts the annotators
/// who back the entry's bit for that label: its votes when positive, the
/// remaining annotators when negative.
pub fn stratified_f1<S: Scalar>(entries: &[ManifestEntry], predictions: ArrayView2<'_, S>, vote_split: u32) -> Strata {
    assert_eq!(predictions.nrows(), entries.len(), "one prediction row per entry");
    let mut low = [None; NUM_LABELS];
    let mut high = [None; NUM_LABELS];
    for (e, row) in entries.iter().zip(predictions.outer_iter()) {
        for k in 0..NUM_LABELS {
            let bucket = if e.label.agreement(k) >= vote_split { &mut high[k] } else { &mut low[k] };
            bucket
                .get_or_insert_with(ConfusionCounts::default)
                .record(row[k] != S::zero(), e.label.labels()[k]);
        }
    }
    Strata { low, high }
}
