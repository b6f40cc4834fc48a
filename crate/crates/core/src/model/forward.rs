use ndarray::{Array2, ArrayView2};
use rand::{Rng as _, RngCore, SeedableRng};
use rayon::prelude::*;

use crate::audio::FeatureSequence;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

use super::attention::AttentionCache;
use super::config::ModelConfig;
use super::ops::{affine, gelu, layer_norm, sigmoid, NormCache};
use super::params::{DecoderLayer, ModelParameters};

pub(crate) struct LayerTrace<S> {
    pub norm_self: NormCache<S>,
    pub self_in: Array2<S>,
    pub self_attn: AttentionCache<S>,
    pub self_mask: Option<Array2<S>>,
    pub norm_cross: NormCache<S>,
    pub cross_in: Array2<S>,
    pub cross_attn: AttentionCache<S>,
    pub cross_mask: Option<Array2<S>>,
    pub norm_ffn: NormCache<S>,
    pub ffn_in: Array2<S>,
    pub ffn_pre: Array2<S>,
    pub ffn_act: Array2<S>,
    pub ffn_mask: Option<Array2<S>>,
}

/// Activations of one sample.
pub struct SampleTrace<S> {
    pub(crate) input: Array2<S>,
    pub(crate) memory: Array2<S>,
    pub(crate) layers: Vec<LayerTrace<S>>,
    pub(crate) decoded: Array2<S>,
}

impl<S: Scalar> SampleTrace<S> {
    /// Decoder output, one row per label.
    pub fn decoded(&self) -> &Array2<S> {
        &self.decoded
    }

    /// Every softmax weight matrix, self- and cross-attention, all layers.
    pub fn attention_weights(&self) -> impl Iterator<Item = &Array2<S>> {
        self.layers.iter().flat_map(|l| {
            l.self_attn
                .weights
                .iter()
                .chain(l.cross_attn.weights.iter())
        })
    }

    /// Cross-attention weights of `layer`, one `K x T` matrix per head.
    pub fn cross_attention(&self, layer: usize) -> &[Array2<S>] {
        &self.layers[layer].cross_attn.weights
    }
}

/// Everything [`backward`](super::backward) needs from a forward call.
pub struct ForwardTrace<S> {
    pub(crate) fingerprint: u64,
    pub(crate) config: ModelConfig,
    pub samples: Vec<SampleTrace<S>>,
}

impl<S> ForwardTrace<S> {
    pub fn batch_size(&self) -> usize {
        self.samples.len()
    }
}

fn dropout_mask<S: Scalar>(shape: (usize, usize), p: f64, rng: &mut Rng) -> Array2<S> {
    let keep = S::lit(1.0 / (1.0 - p));
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < p { S::zero() } else { keep })
}

fn apply_mask<S: Scalar>(x: Array2<S>, mask: &Option<Array2<S>>) -> Array2<S> {
    match mask {
        Some(m) => x * m,
        None => x,
    }
}

fn layer_forward<S: Scalar>(
    layer: &DecoderLayer<S>,
    q: &Array2<S>,
    memory: &ArrayView2<S>,
    cfg: &ModelConfig,
    rng: &mut Option<Rng>,
) -> Result<(Array2<S>, LayerTrace<S>)> {
    let mut mask = |shape| rng.as_mut().map(|r| dropout_mask(shape, cfg.dropout, r));
    let (self_in, norm_self) = layer_norm(q, &layer.norm_self.gain, &layer.norm_self.bias);
    let (a, self_attn) = layer.self_attn.forward(&self_in.view(), &self_in.view(), &self_in.view(), cfg.n_heads)?;
    let self_mask = mask(a.dim());
    let q1 = q + &apply_mask(a, &self_mask);

    let (cross_in, norm_cross) = layer_norm(&q1, &layer.norm_cross.gain, &layer.norm_cross.bias);
    let (a, cross_attn) = layer.cross_attn.forward(&cross_in.view(), memory, memory, cfg.n_heads)?;
    let cross_mask = mask(a.dim());
    let q2 = q1 + &apply_mask(a, &cross_mask);

    let (ffn_in, norm_ffn) = layer_norm(&q2, &layer.norm_ffn.gain, &layer.norm_ffn.bias);
    let ffn_pre = affine(&ffn_in.view(), &layer.ffn.up.weight, &layer.ffn.up.bias);
    let ffn_act = ffn_pre.mapv(gelu);
    let f = affine(&ffn_act.view(), &layer.ffn.down.weight, &layer.ffn.down.bias);
    let ffn_mask = mask(f.dim());
    let q3 = q2 + &apply_mask(f, &ffn_mask);
    Ok((
        q3,
        LayerTrace {
            norm_self,
            self_in,
            self_attn,
            self_mask,
            norm_cross,
            cross_in,
            cross_attn,
            cross_mask,
            norm_ffn,
            ffn_in,
            ffn_pre,
            ffn_act,
            ffn_mask,
        },
    ))
}

fn sample_forward<S: Scalar>(
    params: &ModelParameters<S>,
    input: &Array2<S>,
    mut rng: Option<Rng>,
) -> Result<(Vec<S>, SampleTrace<S>)> {
    let cfg = &params.config;
    let mut memory = affine(&input.view(), &params.input_projection.weight, &params.input_projection.bias);
    memory += &params.positional;
    let mut q = params.style_queries.clone();
    let mut layers = Vec::with_capacity(cfg.n_layers);
    for layer in &params.layers {
        let (next, trace) = layer_forward(layer, &q, &memory.view(), cfg, &mut rng)?;
        q = next;
        layers.push(trace);
    }
    let logits = (0..cfg.n_labels)
        .map(|k| q.row(k).dot(&params.head_weight.row(k)) + params.head_bias[k])
        .collect();
    Ok((
        logits,
        SampleTrace {
            input: input.clone(),
            memory,
            layers,
            decoded: q,
        },
    ))
}

/// Runs the network on a batch of equally shaped feature sequences.
///
/// Returns `B x K` logits (no sigmoid) and the activations needed for
/// backpropagation.
pub fn forward<S: Scalar>(
    params: &ModelParameters<S>,
    batch: &[FeatureSequence<S>],
) -> Result<(Array2<S>, ForwardTrace<S>)> {
    forward_with_dropout(params, batch, None)
}

/// [`forward`] with dropout masks drawn from `rng` when the configured rate
/// is positive. Without an rng (or at rate zero) dropout is off.
pub fn forward_with_dropout<S: Scalar>(
    params: &ModelParameters<S>,
    batch: &[FeatureSequence<S>],
    rng: Option<&mut Rng>,
) -> Result<(Array2<S>, ForwardTrace<S>)> {
    let cfg = &params.config;
    for (i, f) in batch.iter().enumerate() {
        if f.num_frames() != cfg.target_frames {
            return Err(Error::config(
                "target_frames",
                format!("sample {i} has {} frames, model expects {}", f.num_frames(), cfg.target_frames),
            ));
        }
        if f.dim() != cfg.input_dim {
            return Err(Error::config(
                "input_dim",
                format!("sample {i} has dimension {}, model expects {}", f.dim(), cfg.input_dim),
            ));
        }
    }
    // One seed per sample keeps masks independent of how work is scheduled.
    let seeds: Vec<Option<u64>> = match rng {
        Some(r) if cfg.dropout > 0.0 => batch.iter().map(|_| Some(r.next_u64())).collect(),
        _ => vec![None; batch.len()],
    };
    let results: Vec<Result<(Vec<S>, SampleTrace<S>)>> = batch
        .par_iter()
        .zip(seeds.into_par_iter())
        .map(|(f, seed)| sample_forward(params, f.frames(), seed.map(Rng::seed_from_u64)))
        .collect();
    let mut logits = Array2::zeros((batch.len(), cfg.n_labels));
    let mut samples = Vec::with_capacity(batch.len());
    for (b, r) in results.into_iter().enumerate() {
        let (row, trace) = r?;
        for (k, z) in row.into_iter().enumerate() {
            logits[[b, k]] = z;
        }
        samples.push(trace);
    }
    Ok((
        logits,
        ForwardTrace {
            fingerprint: params.fingerprint(),
            config: cfg.clone(),
            samples,
        },
    ))
}

/// Elementwise sigmoid of the logits.
pub fn predict<S: Scalar>(logits: &Array2<S>) -> Array2<S> {
    logits.mapv(sigmoid)
}
