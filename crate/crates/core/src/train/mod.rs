//! Supervised training: binary cross-entropy per label, Adam, seeded
//! batching with random crops, and per-epoch checkpoints.

mod adam;
mod config;
mod data;
mod loss;
mod run;

pub use adam::{adam_step, AdamState};
pub use config::TrainConfig;
pub use data::{assemble_batch, epoch_order, make_batches, Batch, FeatureStore};
pub use loss::bce_loss;
pub use run::{fit, train, train_with, EpochLog, TrainOutcome, RUN_SUMMARY_FILE};
