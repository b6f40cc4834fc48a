//! Feature-space speaker conversion for under-represented labels.
//!
//! Each frame of a source utterance is replaced by the mean of its `k`
//! nearest frames (cosine distance) in a pool drawn from one target speaker.
//! The output carries the target speaker's labels. A greedy planner decides
//! which conversions to make so that deficient labels reach their targets.

mod execute;
mod knn;
mod plan;
mod pool;

pub use execute::{execute_plan, format_skip_report, ExecutionReport};
pub use knn::{cosine_distance, knn_convert, nearest_indices};
pub use plan::{balance_targets, label_counts, plan_augmentation, AugmentationPlan, PlanItem, PlanOptions};
pub use pool::{build_pool, FramePool};

/// Seconds of target speech gathered into a pool.
pub const DEFAULT_POOL_SECONDS: f64 = 60.0;
/// Neighbours averaged per output frame.
pub const DEFAULT_K: usize = 4;
/// Total duration of generated material.
pub const DEFAULT_BUDGET_HOURS: f64 = 14.0;
