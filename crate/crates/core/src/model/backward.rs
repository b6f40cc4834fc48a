use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::forward::{ForwardTrace, LayerTrace, SampleTrace};
use super::ops::{affine_backward, gelu_grad, layer_norm_backward};
use super::params::{DecoderLayer, ModelParameters};

/// Samples per gradient partial sum. Fixed so the reduction order, and
/// therefore the result, does not depend on the number of worker threads.
const REDUCTION_CHUNK: usize = 8;

fn masked<S: Scalar>(d: &Array2<S>, mask: &Option<Array2<S>>) -> Array2<S> {
    match mask {
        Some(m) => d * m,
        None => d.clone(),
    }
}

fn layer_backward<S: Scalar>(
    layer: &DecoderLayer<S>,
    t: &LayerTrace<S>,
    memory: &Array2<S>,
    dq: Array2<S>,
    dmemory: &mut Array2<S>,
    g: &mut DecoderLayer<S>,
    n_heads: usize,
) -> Array2<S> {
    // q3 = q2 + ffn(ln3(q2))
    let df = masked(&dq, &t.ffn_mask);
    let mut dact = affine_backward(&t.ffn_act.view(), &layer.ffn.down.weight, &df, &mut g.ffn.down.weight, &mut g.ffn.down.bias);
    dact.zip_mut_with(&t.ffn_pre, |d, &u| *d *= gelu_grad(u));
    let dn3 = affine_backward(&t.ffn_in.view(), &layer.ffn.up.weight, &dact, &mut g.ffn.up.weight, &mut g.ffn.up.bias);
    let dq2 = dq + &layer_norm_backward(&t.norm_ffn, &layer.norm_ffn.gain, &dn3, &mut g.norm_ffn.gain, &mut g.norm_ffn.bias);

    // q2 = q1 + cross(ln2(q1), memory)
    let da = masked(&dq2, &t.cross_mask);
    let m = memory.view();
    let (dn2, dk, dv) = layer.cross_attn.backward(&t.cross_attn, &t.cross_in.view(), &m, &m, &da, &mut g.cross_attn, n_heads);
    *dmemory += &dk;
    *dmemory += &dv;
    let dq1 = dq2 + &layer_norm_backward(&t.norm_cross, &layer.norm_cross.gain, &dn2, &mut g.norm_cross.gain, &mut g.norm_cross.bias);

    // q1 = q + self(ln1(q))
    let da = masked(&dq1, &t.self_mask);
    let x = t.self_in.view();
    let (a, b, c) = layer.self_attn.backward(&t.self_attn, &x, &x, &x, &da, &mut g.self_attn, n_heads);
    let dn1 = a + &b + &c;
    dq1 + &layer_norm_backward(&t.norm_self, &layer.norm_self.gain, &dn1, &mut g.norm_self.gain, &mut g.norm_self.bias)
}

/// Gradient of the decoded vectors from the label heads. Head `k` reads
/// only row `k`, so every other row of the result is zero for it.
pub fn heads_backward<S: Scalar>(
    params: &ModelParameters<S>,
    decoded: &Array2<S>,
    dlogits: ArrayView1<S>,
    grads: &mut ModelParameters<S>,
) -> Array2<S> {
    let mut ddecoded = Array2::zeros(decoded.dim());
    for (k, &dz) in dlogits.iter().enumerate() {
        grads.head_weight.row_mut(k).scaled_add(dz, &decoded.row(k));
        grads.head_bias[k] += dz;
        ddecoded.row_mut(k).scaled_add(dz, &params.head_weight.row(k));
    }
    ddecoded
}

fn sample_backward<S: Scalar>(
    params: &ModelParameters<S>,
    trace: &SampleTrace<S>,
    dlogits: ArrayView1<S>,
    grads: &mut ModelParameters<S>,
) {
    let cfg = &params.config;
    let mut dq = heads_backward(params, &trace.decoded, dlogits, grads);
    let mut dmemory = Array2::zeros(trace.memory.dim());
    for ((layer, t), g) in params
        .layers
        .iter()
        .zip(&trace.layers)
        .zip(grads.layers.iter_mut())
        .rev()
    {
        dq = layer_backward(layer, t, &trace.memory, dq, &mut dmemory, g, cfg.n_heads);
    }
    grads.style_queries += &dq;
    // memory = input W + b + positional; the input itself needs no gradient
    ndarray::linalg::general_mat_mul(
        S::one(),
        &trace.input.t(),
        &dmemory,
        S::one(),
        &mut grads.input_projection.weight,
    );
    grads.input_projection.bias += &dmemory.sum_axis(Axis(0));
}

/// Exact gradients of a scalar loss with respect to every trainable tensor,
/// given the loss gradient with respect to the `B x K` logits.
pub fn backward<S: Scalar>(
    params: &ModelParameters<S>,
    trace: &ForwardTrace<S>,
    dlogits: &Array2<S>,
) -> Result<ModelParameters<S>> {
    if trace.config != params.config {
        return Err(Error::Contract("trace was produced with a different model configuration".into()));
    }
    if trace.fingerprint != params.fingerprint() {
        return Err(Error::Contract("trace is stale: parameters changed since the forward pass".into()));
    }
    if dlogits.dim() != (trace.batch_size(), params.config.n_labels) {
        return Err(Error::Contract(format!(
            "loss gradient is {:?}, trace covers {} samples x {} labels",
            dlogits.dim(),
            trace.batch_size(),
            params.config.n_labels
        )));
    }
    let partials: Vec<ModelParameters<S>> = trace
        .samples
        .par_chunks(REDUCTION_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut g = params.zeros_like();
            for (i, s) in chunk.iter().enumerate() {
                sample_backward(params, s, dlogits.row(c * REDUCTION_CHUNK + i), &mut g);
            }
            g
        })
        .collect();
    let mut total = params.zeros_like();
    for p in &partials {
        total.add_scaled(p, S::one());
    }
    Ok(total)
}
