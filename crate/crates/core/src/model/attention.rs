use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::ops::{affine, affine_backward, softmax_rows, softmax_rows_backward};
use super::params::Attention;

/// Per-head scaled dot-product attention over already projected inputs.
///
/// Head `h` uses columns `h*dh..(h+1)*dh`; the head outputs are written back
/// into the same columns. Returns the concatenated context and the
/// `M x N` weight matrix of every head.
pub fn scaled_dot_product<S: Scalar>(
    q: &ArrayView2<S>,
    k: &ArrayView2<S>,
    v: &ArrayView2<S>,
    n_heads: usize,
) -> Result<(Array2<S>, Vec<Array2<S>>)> {
    let d = q.ncols();
    if n_heads == 0 || d % n_heads != 0 {
        return Err(Error::config("n_heads", format!("width {d} not divisible by {n_heads} heads")));
    }
    if k.ncols() != d || v.ncols() != d || k.nrows() != v.nrows() || k.nrows() == 0 {
        return Err(Error::config(
            "attention",
            format!("shapes q {:?}, k {:?}, v {:?} are incompatible", q.dim(), k.dim(), v.dim()),
        ));
    }
    let dh = d / n_heads;
    let scale = S::lit(1.0 / (dh as f64).sqrt());
    let mut context = Array2::zeros((q.nrows(), d));
    let mut weights = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let mut a = q.slice(cols).dot(&k.slice(cols).t());
        a *= scale;
        softmax_rows(&mut a);
        context.slice_mut(cols).assign(&a.dot(&v.slice(cols)));
        weights.push(a);
    }
    Ok((context, weights))
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct AttentionCache<S> {
    pub q: Array2<S>,
    pub k: Array2<S>,
    pub v: Array2<S>,
    /// Softmax weights, one `M x N` matrix per head.
    pub weights: Vec<Array2<S>>,
    pub context: Array2<S>,
}

fn check_finite<S: Scalar>(name: &str, x: &ArrayView2<S>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite value in attention {name}")))
    }
}

impl<S: Scalar> Attention<S> {
    /// Projects queries, keys and values, attends per head, then applies the
    /// output projection.
    pub fn forward(
        &self,
        queries: &ArrayView2<S>,
        keys: &ArrayView2<S>,
        values: &ArrayView2<S>,
        n_heads: usize,
    ) -> Result<(Array2<S>, AttentionCache<S>)> {
        check_finite("queries", queries)?;
        check_finite("keys", keys)?;
        check_finite("values", values)?;
        let q = affine(queries, &self.query.weight, &self.query.bias);
        let k = affine(keys, &self.key.weight, &self.key.bias);
        let v = affine(values, &self.value.weight, &self.value.bias);
        let (context, weights) = scaled_dot_product(&q.view(), &k.view(), &v.view(), n_heads)?;
        let out = affine(&context.view(), &self.output.weight, &self.output.bias);
        Ok((
            out,
            AttentionCache {
                q,
                k,
                v,
                weights,
                context,
            },
        ))
    }

    /// Accumulates parameter gradients into `grads` and returns the
    /// gradients with respect to the query, key and value inputs.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn backward(
        &self,
        cache: &AttentionCache<S>,
        queries: &ArrayView2<S>,
        keys: &ArrayView2<S>,
        values: &ArrayView2<S>,
        dout: &Array2<S>,
        grads: &mut Attention<S>,
        n_heads: usize,
    ) -> (Array2<S>, Array2<S>, Array2<S>) {
        let dcontext = affine_backward(
            &cache.context.view(),
            &self.output.weight,
            dout,
            &mut grads.output.weight,
            &mut grads.output.bias,
        );
        let d = cache.q.ncols();
        let dh = d / n_heads;
        let scale = S::lit(1.0 / (dh as f64).sqrt());
        let mut dq = Array2::zeros(cache.q.dim());
        let mut dk = Array2::zeros(cache.k.dim());
        let mut dv = Array2::zeros(cache.v.dim());
        for (h, a) in cache.weights.iter().enumerate() {
            let cols = s![.., h * dh..(h + 1) * dh];
            let dctx = dcontext.slice(cols);
            let da = dctx.dot(&cache.v.slice(cols).t());
            dv.slice_mut(cols).assign(&a.t().dot(&dctx));
            let mut ds = softmax_rows_backward(a, &da);
            ds *= scale;
            dq.slice_mut(cols).assign(&ds.dot(&cache.k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&cache.q.slice(cols)));
        }
        let dx_q = affine_backward(queries, &self.query.weight, &dq, &mut grads.query.weight, &mut grads.query.bias);
        let dx_k = affine_backward(keys, &self.key.weight, &dk, &mut grads.key.weight, &mut grads.key.bias);
        let dx_v = affine_backward(values, &self.value.weight, &dv, &mut grads.value.weight, &mut grads.value.bias);
        (dx_q, dx_k, dx_v)
    }
}
