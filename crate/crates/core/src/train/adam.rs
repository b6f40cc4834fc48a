use crate::error::{Error, Result};
use crate::model::ModelParameters;
use crate::train::TrainConfig;
use crate::Scalar;

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    pub m: ModelParameters<S>,
    pub v: ModelParameters<S>,
    pub t: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &ModelParameters<S>) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One Adam update in place.
///
/// A non-finite gradient aborts the step with a numeric error before
/// anything is modified. Weight decay and clipping apply only when
/// configured.
pub fn adam_step<S: Scalar>(
    params: &mut ModelParameters<S>,
    grads: &ModelParameters<S>,
    state: &mut AdamState<S>,
    cfg: &TrainConfig,
) -> Result<()> {
    if params.config != grads.config || params.config != state.m.config {
        return Err(Error::Contract("parameter, gradient and optimizer shapes differ".into()));
    }
    let g_tensors = grads.tensors();
    if let Some((name, _)) = g_tensors.iter().find(|(_, t)| t.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numeric(format!("non-finite gradient in {name}")));
    }
    let clip = match cfg.grad_clip {
        Some(c) => {
            let norm = g_tensors
                .iter()
                .flat_map(|(_, t)| t.iter())
                .map(|g| g.as_f64().powi(2))
                .sum::<f64>()
                .sqrt();
            if norm > c {
                c / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    };

    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let (lr, eps, wd) = (cfg.learning_rate, cfg.adam_eps, cfg.weight_decay);

    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    let ps = params.tensors_mut();
    for (((mut p, mut m), mut v), (_, g)) in ps.into_iter().zip(ms).zip(vs).zip(g_tensors) {
        ndarray::Zip::from(&mut p)
            .and(&mut m)
            .and(&mut v)
            .and(&g)
            .for_each(|p, m, v, g| {
                let g = g.as_f64() * clip + wd * p.as_f64();
                let m1 = b1 * m.as_f64() + (1.0 - b1) * g;
                let v1 = b2 * v.as_f64() + (1.0 - b2) * g * g;
                *m = S::lit(m1);
                *v = S::lit(v1);
                let update = lr * (m1 / c1) / ((v1 / c2).sqrt() + eps);
                *p = S::lit(p.as_f64() - update);
            });
    }
    Ok(())
}
