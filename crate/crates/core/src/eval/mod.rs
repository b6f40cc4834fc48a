//! Per-label and macro F1, detection probabilities, and F1 split by
//! annotator agreement.

mod metrics;
mod report;

pub use metrics::{
    binarize, confusion, detection_probability, f1, macro_f1, stratified_f1, ConfusionCounts, Strata,
};
pub use report::{
    checkpoint_id, evaluate, predict_entries, EvalOptions, LabelBlock, MetricsReport, StratumBlock,
    DEFAULT_THRESHOLD, DEFAULT_VOTE_SPLIT,
};
