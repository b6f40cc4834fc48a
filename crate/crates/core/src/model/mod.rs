//! The style-query transformer decoder and its exact gradients.

mod attention;
mod backward;
mod checkpoint;
mod config;
mod forward;
pub(crate) mod ops;
mod params;

pub use attention::{scaled_dot_product, AttentionCache};
pub use backward::{backward, heads_backward};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{InputNorm, ModelConfig};
pub use forward::{forward, forward_with_dropout, predict, ForwardTrace, SampleTrace};
pub use ops::sigmoid;
pub use params::{Attention, DecoderLayer, FeedForward, LayerNorm, Linear, ModelParameters};
