//! Dense building blocks and their exact backward passes.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use crate::scalar::Scalar;

pub(crate) const LN_EPS: f64 = 1e-5;

/// `x W + b` with `W` stored `in x out`.
pub(crate) fn affine<S: Scalar>(x: &ArrayView2<S>, w: &Array2<S>, b: &Array1<S>) -> Array2<S> {
    let mut y = x.dot(w);
    y += b;
    y
}

/// Accumulates `dW += x^T dy`, `db += sum_rows(dy)` and returns `dy W^T`.
pub(crate) fn affine_backward<S: Scalar>(
    x: &ArrayView2<S>,
    w: &Array2<S>,
    dy: &Array2<S>,
    dw: &mut Array2<S>,
    db: &mut Array1<S>,
) -> Array2<S> {
    ndarray::linalg::general_mat_mul(S::one(), &x.t(), dy, S::one(), dw);
    *db += &dy.sum_axis(Axis(0));
    dy.dot(&w.t())
}

pub(crate) struct NormCache<S> {
    pub xhat: Array2<S>,
    pub inv_std: Array1<S>,
}

/// Row-wise layer normalization.
pub(crate) fn layer_norm<S: Scalar>(
    x: &Array2<S>,
    gain: &Array1<S>,
    bias: &Array1<S>,
) -> (Array2<S>, NormCache<S>) {
    let d = S::lit(x.ncols() as f64);
    let eps = S::lit(LN_EPS);
    let mut xhat = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, inv) in xhat.outer_iter_mut().zip(inv_std.iter_mut()) {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|&v| v * v).sum::<S>() / d;
        *inv = S::one() / (var + eps).sqrt();
        let s = *inv;
        row.mapv_inplace(|v| v * s);
    }
    let mut y = &xhat * gain;
    y += bias;
    (y, NormCache { xhat, inv_std })
}

pub(crate) fn layer_norm_backward<S: Scalar>(
    cache: &NormCache<S>,
    gain: &Array1<S>,
    dy: &Array2<S>,
    dgain: &mut Array1<S>,
    dbias: &mut Array1<S>,
) -> Array2<S> {
    *dgain += &(dy * &cache.xhat).sum_axis(Axis(0));
    *dbias += &dy.sum_axis(Axis(0));
    let d = S::lit(dy.ncols() as f64);
    let mut dx = dy * gain;
    for ((mut row, xh), &inv) in dx
        .outer_iter_mut()
        .zip(cache.xhat.outer_iter())
        .zip(cache.inv_std.iter())
    {
        let mean_g = row.sum() / d;
        let mean_gx = row.iter().zip(xh.iter()).map(|(&g, &x)| g * x).sum::<S>() / d;
        Zip::from(&mut row)
            .and(&xh)
            .for_each(|g, &x| *g = inv * (*g - mean_g - x * mean_gx));
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// Tanh approximation of GELU.
pub(crate) fn gelu<S: Scalar>(x: S) -> S {
    let c = S::lit(GELU_C);
    let a = S::lit(GELU_A);
    let half = S::lit(0.5);
    half * x * (S::one() + (c * (x + a * x * x * x)).tanh())
}

pub(crate) fn gelu_grad<S: Scalar>(x: S) -> S {
    let c = S::lit(GELU_C);
    let a = S::lit(GELU_A);
    let half = S::lit(0.5);
    let t = (c * (x + a * x * x * x)).tanh();
    half * (S::one() + t) + half * x * (S::one() - t * t) * c * (S::one() + S::lit(3.0) * a * x * x)
}

/// Row-wise softmax. The denominator is accumulated in `f64` so rows sum to
/// one to within a rounding of the output precision.
pub(crate) fn softmax_rows<S: Scalar>(scores: &mut Array2<S>) {
    for mut row in scores.outer_iter_mut() {
        let max = row.iter().fold(S::neg_infinity(), |m, &v| m.max(v));
        let mut total = 0.0f64;
        row.mapv_inplace(|v| {
            let e = (v - max).exp();
            total += e.as_f64();
            e
        });
        let inv = 1.0 / total;
        row.mapv_inplace(|v| S::lit(v.as_f64() * inv));
    }
}

/// Given `a = softmax(s)` and `da`, returns `ds`.
pub(crate) fn softmax_rows_backward<S: Scalar>(a: &Array2<S>, da: &Array2<S>) -> Array2<S> {
    let mut ds = da.clone();
    for (mut g, p) in ds.outer_iter_mut().zip(a.outer_iter()) {
        let dot = g.iter().zip(p.iter()).map(|(&x, &y)| x * y).sum::<S>();
        Zip::from(&mut g).and(&p).for_each(|g, &p| *g = p * (*g - dot));
    }
    ds
}

/// Numerically stable logistic function.
pub fn sigmoid<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gelu_grad_matches_difference() {
        for &x in &[-3.0f64, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut s = array![[1.0f32, 2.0, 3.0], [1000.0, 1000.0, -1000.0]];
        softmax_rows(&mut s);
        for row in s.outer_iter() {
            assert!((row.iter().map(|&v| v as f64).sum::<f64>() - 1.0).abs() < 1e-6);
        }
        assert_eq!(s[[1, 0]], 0.5);
    }

    #[test]
    fn layer_norm_backward_matches_difference() {
        let x = array![[0.3, -1.2, 2.0, 0.1], [1.0, 1.5, -0.5, 0.0]];
        let g = array![1.1, 0.9, -0.4, 2.0];
        let b = array![0.1, 0.2, 0.3, 0.4];
        let w = array![[0.5, -1.0, 0.3, 0.7], [0.2, 0.9, -0.6, 1.1]];
        let loss = |x: &Array2<f64>| (&layer_norm(x, &g, &b).0 * &w).sum();
        let (_, cache) = layer_norm(&x, &g, &b);
        let (mut dg, mut db) = (Array1::zeros(4), Array1::zeros(4));
        let dx = layer_norm_backward(&cache, &g, &w, &mut dg, &mut db);
        for i in 0..2 {
            for j in 0..4 {
                let mut p = x.clone();
                p[[i, j]] += 1e-6;
                let mut m = x.clone();
                m[[i, j]] -= 1e-6;
                let fd = (loss(&p) - loss(&m)) / 2e-6;
                assert!((fd - dx[[i, j]]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn sigmoid_cases() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!((sigmoid(-3.7f64) - (1.0 - sigmoid(3.7f64))).abs() < 1e-15);
        assert_eq!(sigmoid(500.0f32), 1.0);
        assert_eq!(sigmoid(-500.0f64).is_finite(), true);
    }
}
