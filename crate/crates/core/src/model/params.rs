use std::hash::Hasher;

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::rng::{substream, Rng};
use crate::scalar::Scalar;

use super::config::ModelConfig;

/// Affine map `x W + b`, `W` stored `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<S> {
    pub weight: Array2<S>,
    pub bias: Array1<S>,
}

impl<S: Scalar> Linear<S> {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn glorot(fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Self {
            weight: Array2::from_shape_simple_fn((fan_in, fan_out), || S::lit(rng.random_range(-a..a))),
            bias: Array1::zeros(fan_out),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm<S> {
    pub gain: Array1<S>,
    pub bias: Array1<S>,
}

impl<S: Scalar> LayerNorm<S> {
    fn new(d: usize) -> Self {
        Self {
            gain: Array1::ones(d),
            bias: Array1::zeros(d),
        }
    }
}

/// Multi-head attention projections.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention<S> {
    pub query: Linear<S>,
    pub key: Linear<S>,
    pub value: Linear<S>,
    pub output: Linear<S>,
}

impl<S: Scalar> Attention<S> {
    fn zeros(d: usize) -> Self {
        Self {
            query: Linear::zeros(d, d),
            key: Linear::zeros(d, d),
            value: Linear::zeros(d, d),
            output: Linear::zeros(d, d),
        }
    }

    fn glorot(d: usize, rng: &mut Rng) -> Self {
        Self {
            query: Linear::glorot(d, d, rng),
            key: Linear::glorot(d, d, rng),
            value: Linear::glorot(d, d, rng),
            output: Linear::glorot(d, d, rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward<S> {
    pub up: Linear<S>,
    pub down: Linear<S>,
}

/// Pre-norm decoder block: query self-attention, cross-attention into the
/// acoustic memory, then a position-wise feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderLayer<S> {
    pub norm_self: LayerNorm<S>,
    pub self_attn: Attention<S>,
    pub norm_cross: LayerNorm<S>,
    pub cross_attn: Attention<S>,
    pub norm_ffn: LayerNorm<S>,
    pub ffn: FeedForward<S>,
}

/// All trainable weights, plus the fixed positional table.
///
/// Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters<S> {
    pub config: ModelConfig,
    pub input_projection: Linear<S>,
    /// Row `k` is the query embedding for label `k`.
    pub style_queries: Array2<S>,
    pub layers: Vec<DecoderLayer<S>>,
    /// Row `k` holds the weights of label `k`'s logit head.
    pub head_weight: Array2<S>,
    pub head_bias: Array1<S>,
    /// Sinusoidal encoding added to memory frames. Not trained.
    pub positional: Array2<S>,
}

pub(crate) fn sinusoidal_table<S: Scalar>(frames: usize, d: usize) -> Array2<S> {
    Array2::from_shape_fn((frames, d), |(t, i)| {
        let rate = 10000f64.powf(-((i / 2 * 2) as f64) / d as f64);
        let angle = t as f64 * rate;
        S::lit(if i % 2 == 0 { angle.sin() } else { angle.cos() })
    })
}

impl<S: Scalar> ModelParameters<S> {
    /// Glorot-uniform weights, zero biases, unit layer-norm gains and
    /// `N(0, 0.02)` style queries, all drawn from `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> crate::Result<Self> {
        config.validate()?;
        let mut rng = substream(seed, "init", &[]);
        let (d, k) = (config.d_model, config.n_labels);
        let input_projection = Linear::glorot(config.input_dim, d, &mut rng);
        let normal = Normal::new(0.0, 0.02).expect("valid normal");
        let style_queries = Array2::from_shape_simple_fn((k, d), || S::lit(normal.sample(&mut rng)));
        let layers = (0..config.n_layers)
            .map(|_| DecoderLayer {
                norm_self: LayerNorm::new(d),
                self_attn: Attention::glorot(d, &mut rng),
                norm_cross: LayerNorm::new(d),
                cross_attn: Attention::glorot(d, &mut rng),
                norm_ffn: LayerNorm::new(d),
                ffn: FeedForward {
                    up: Linear::glorot(d, config.ffn_dim, &mut rng),
                    down: Linear::glorot(config.ffn_dim, d, &mut rng),
                },
            })
            .collect();
        let a = (6.0 / (d + 1) as f64).sqrt();
        let head_weight = Array2::from_shape_simple_fn((k, d), || S::lit(rng.random_range(-a..a)));
        Ok(Self {
            config: config.clone(),
            input_projection,
            style_queries,
            layers,
            head_weight,
            head_bias: Array1::zeros(k),
            positional: sinusoidal_table(config.target_frames, d),
        })
    }

    /// Every tensor zero, layer-norm gains included; the shape of a gradient.
    pub fn zeros(config: &ModelConfig) -> Self {
        let (d, k) = (config.d_model, config.n_labels);
        let zero_norm = || LayerNorm {
            gain: Array1::zeros(d),
            bias: Array1::zeros(d),
        };
        Self {
            config: config.clone(),
            input_projection: Linear::zeros(config.input_dim, d),
            style_queries: Array2::zeros((k, d)),
            layers: (0..config.n_layers)
                .map(|_| DecoderLayer {
                    norm_self: zero_norm(),
                    self_attn: Attention::zeros(d),
                    norm_cross: zero_norm(),
                    cross_attn: Attention::zeros(d),
                    norm_ffn: zero_norm(),
                    ffn: FeedForward {
                        up: Linear::zeros(d, config.ffn_dim),
                        down: Linear::zeros(config.ffn_dim, d),
                    },
                })
                .collect(),
            head_weight: Array2::zeros((k, d)),
            head_bias: Array1::zeros(k),
            positional: sinusoidal_table(config.target_frames, d),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.config)
    }

    /// Trainable tensors in canonical order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, S>)> {
        let mut out = Vec::new();
        macro_rules! push {
            ($name:expr, $v:expr) => {
                out.push(($name, $v))
            };
        }
        push!("input_projection.weight".into(), self.input_projection.weight.view().into_dyn());
        push!("input_projection.bias".into(), self.input_projection.bias.view().into_dyn());
        push!("style_queries".into(), self.style_queries.view().into_dyn());
        for (i, l) in self.layers.iter().enumerate() {
            let p = format!("layers.{i}");
            for (n, norm) in [("norm_self", &l.norm_self), ("norm_cross", &l.norm_cross), ("norm_ffn", &l.norm_ffn)] {
                push!(format!("{p}.{n}.gain"), norm.gain.view().into_dyn());
                push!(format!("{p}.{n}.bias"), norm.bias.view().into_dyn());
            }
            for (n, att) in [("self_attn", &l.self_attn), ("cross_attn", &l.cross_attn)] {
                for (m, lin) in [("query", &att.query), ("key", &att.key), ("value", &att.value), ("output", &att.output)] {
                    push!(format!("{p}.{n}.{m}.weight"), lin.weight.view().into_dyn());
                    push!(format!("{p}.{n}.{m}.bias"), lin.bias.view().into_dyn());
                }
            }
            for (m, lin) in [("up", &l.ffn.up), ("down", &l.ffn.down)] {
                push!(format!("{p}.ffn.{m}.weight"), lin.weight.view().into_dyn());
                push!(format!("{p}.ffn.{m}.bias"), lin.bias.view().into_dyn());
            }
        }
        push!("heads.weight".into(), self.head_weight.view().into_dyn());
        push!("heads.bias".into(), self.head_bias.view().into_dyn());
        out
    }

    /// Mutable views in the same order as [`tensors`](Self::tensors).
    pub fn tensors_mut(&mut self) -> Vec<ArrayViewMutD<'_, S>> {
        let mut out = vec![
            self.input_projection.weight.view_mut().into_dyn(),
            self.input_projection.bias.view_mut().into_dyn(),
            self.style_queries.view_mut().into_dyn(),
        ];
        for l in self.layers.iter_mut() {
            for norm in [&mut l.norm_self, &mut l.norm_cross, &mut l.norm_ffn] {
                out.push(norm.gain.view_mut().into_dyn());
                out.push(norm.bias.view_mut().into_dyn());
            }
            for att in [&mut l.self_attn, &mut l.cross_attn] {
                for lin in [&mut att.query, &mut att.key, &mut att.value, &mut att.output] {
                    out.push(lin.weight.view_mut().into_dyn());
                    out.push(lin.bias.view_mut().into_dyn());
                }
            }
            for lin in [&mut l.ffn.up, &mut l.ffn.down] {
                out.push(lin.weight.view_mut().into_dyn());
                out.push(lin.bias.view_mut().into_dyn());
            }
        }
        out.push(self.head_weight.view_mut().into_dyn());
        out.push(self.head_bias.view_mut().into_dyn());
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Hash of every trainable value's bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for (_, t) in self.tensors() {
            h.write_usize(t.len());
            for v in t.iter() {
                h.write_u64(v.as_f64().to_bits());
            }
        }
        h.finish()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Self, scale: S) {
        let src: Vec<_> = other.tensors().into_iter().map(|(_, t)| t).collect();
        for (mut dst, src) in self.tensors_mut().into_iter().zip(src) {
            dst.scaled_add(scale, &src);
        }
    }

    pub fn cast<T: Scalar>(&self) -> ModelParameters<T> {
        let mut out = ModelParameters::<T>::zeros(&self.config);
        let src: Vec<_> = self.tensors().into_iter().map(|(_, t)| t).collect();
        for (mut dst, src) in out.tensors_mut().into_iter().zip(src) {
            dst.zip_mut_with(&src, |d, s| *d = T::lit(s.as_f64()));
        }
        out
    }
}
