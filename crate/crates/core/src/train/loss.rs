use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::sigmoid;
use crate::Scalar;

/// Mean binary cross-entropy with logits over all `B x K` entries, and its
/// gradient with respect to the logits.
///
/// Uses `max(z, 0) - z*y + ln(1 + exp(-|z|))`, which never overflows.
pub fn bce_loss<S: Scalar>(logits: &Array2<S>, targets: &Array2<S>) -> Result<(f64, Array2<S>)> {
    if logits.dim() != targets.dim() {
        return Err(Error::Validation(format!(
            "logits are {:?} but targets are {:?}",
            logits.dim(),
            targets.dim()
        )));
    }
    if let Some(bad) = targets.iter().find(|&&y| y != S::zero() && y != S::one()) {
        return Err(Error::Validation(format!("target {bad} is not 0 or 1")));
    }
    let n = logits.len().max(1) as f64;
    let total: f64 = logits
        .iter()
        .zip(targets.iter())
        .map(|(z, y)| {
            let (z, y) = (z.as_f64(), y.as_f64());
            z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
        })
        .sum();
    let scale = S::lit(1.0 / n);
    let mut grad = logits.mapv(sigmoid);
    grad.zip_mut_with(targets, |g, &y| *g = (*g - y) * scale);
    Ok((total / n, grad))
}
