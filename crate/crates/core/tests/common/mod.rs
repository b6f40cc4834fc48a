#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng as _, SeedableRng};
use stylemlc::audio::{FeatureKind, FeatureSequence};
use stylemlc::model::{forward, ModelConfig, ModelParameters};
use stylemlc::rng::Rng;
use stylemlc::Scalar;

/// d_model 8, one layer, one head, T 4, K 2.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        d_model: 8,
        n_layers: 1,
        n_heads: 1,
        n_labels: 2,
        input_dim: 3,
        ffn_dim: 16,
        target_frames: 4,
        ..Default::default()
    }
}

pub fn random_batch<S: Scalar>(cfg: &ModelConfig, b: usize, seed: u64) -> Vec<FeatureSequence<S>> {
    let mut rng = Rng::seed_from_u64(seed);
    (0..b)
        .map(|_| {
            let frames = Array2::from_shape_simple_fn((cfg.target_frames, cfg.input_dim), || {
                S::lit(rng.random_range(-1.5..1.5))
            });
            FeatureSequence::new(frames, 10_000, FeatureKind::External).unwrap()
        })
        .collect()
}

/// Initialized parameters with every tensor nudged off its initial value,
/// so zero biases and unit gains do not hide gradient errors.
pub fn perturbed_params<S: Scalar>(cfg: &ModelConfig, seed: u64) -> ModelParameters<S> {
    let mut p = ModelParameters::<S>::init(cfg, seed).unwrap();
    let mut rng = Rng::seed_from_u64(seed ^ 0xabcdef);
    for mut t in p.tensors_mut() {
        t.mapv_inplace(|v| v + S::lit(rng.random_range(-0.3..0.3)));
    }
    p
}

/// `sum(c * logits)` for a fixed weighting `c`.
pub fn weighted_logit_sum(params: &ModelParameters<f64>, batch: &[FeatureSequence<f64>], c: &Array2<f64>) -> f64 {
    let (logits, _) = forward(params, batch).unwrap();
    (&logits * c).sum()
}

/// Per-tensor relative error between analytic and central-difference
/// gradients: `|a - fd| / max(|a|, |fd|, 1e-4)` in the Euclidean norm.
/// The floor covers tensors whose true gradient is zero (key biases under
/// a softmax), where only difference noise remains.
pub fn gradient_check(
    params: &ModelParameters<f64>,
    grads: &ModelParameters<f64>,
    batch: &[FeatureSequence<f64>],
    c: &Array2<f64>,
    h: f64,
) -> Vec<(String, f64)> {
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    let analytic: Vec<Vec<f64>> = grads.tensors().into_iter().map(|(_, t)| t.iter().copied().collect()).collect();
    let mut out = Vec::new();
    for (ti, name) in names.iter().enumerate() {
        let len = analytic[ti].len();
        let mut fd = vec![0.0; len];
        for (i, slot) in fd.iter_mut().enumerate() {
            let mut p = params.clone();
            let orig = *p.tensors_mut()[ti].iter().nth(i).unwrap();
            *p.tensors_mut()[ti].iter_mut().nth(i).unwrap() = orig + h;
            let up = weighted_logit_sum(&p, batch, c);
            *p.tensors_mut()[ti].iter_mut().nth(i).unwrap() = orig - h;
            let down = weighted_logit_sum(&p, batch, c);
            *slot = (up - down) / (2.0 * h);
        }
        let diff: f64 = analytic[ti].iter().zip(&fd).map(|(a, f)| (a - f).powi(2)).sum::<f64>().sqrt();
        let na: f64 = analytic[ti].iter().map(|a| a * a).sum::<f64>().sqrt();
        let nf: f64 = fd.iter().map(|f| f * f).sum::<f64>().sqrt();
        out.push((name.clone(), diff / na.max(nf).max(1e-4)));
    }
    out
}
