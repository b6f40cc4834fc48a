//! Multi-label speaking-style classification.
//!
//! A transformer decoder whose learnable style queries (one per label)
//! cross-attend over acoustic feature frames, followed by one
//! linear-plus-sigmoid head per label. The crate also carries the pieces
//! needed around the network: log-mel feature extraction, manifest and
//! label handling, a procedural synthetic corpus, Adam training with
//! binary cross-entropy, kNN feature-space conversion for augmenting
//! under-represented labels, and agreement-aware evaluation.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root pick `f32`, which is what training and the
//! on-disk formats use.

pub mod audio;
pub mod augment;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod train;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use audio::{FeatureKind, FeatureSequence, MelFilterbank, Waveform};
pub use corpus::{Label, LabelVector, ManifestEntry, Split, StyleSpec};
pub use model::{ModelConfig, ModelParameters};
pub use train::TrainConfig;

/// Single-precision feature sequence, the on-disk and training precision.
pub type Features = FeatureSequence<f32>;
/// Single-precision waveform.
pub type Wave = Waveform<f32>;
/// Single-precision model parameters.
pub type Params = ModelParameters<f32>;
/// Double-precision model parameters, used for gradient checking.
pub type Params64 = ModelParameters<f64>;

/// Number of style labels.
pub const NUM_LABELS: usize = 8;
/// Annotators per sample in the reference annotation protocol.
pub const DEFAULT_ANNOTATORS: u32 = 8;
/// Sample rate accepted by the audio front end.
pub const SAMPLE_RATE: u32 = 16_000;
