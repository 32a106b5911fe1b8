//! Plain SGD with global-gradient-norm clipping.

use crate::error::{Error, Result};
use crate::nn::params::ParamSet;

/// One SGD update: clip the global L2 gradient norm to `clip` (pass
/// `f64::INFINITY` to disable), subtract `lr` times the gradient from every
/// parameter, then zero all gradients.
pub fn sgd_step(params: &mut ParamSet, lr: f64, clip: f64) -> Result<()> {
    if let Some(name) = params.first_nonfinite_grad() {
        return Err(Error::numeric(format!(
            "non-finite gradient in parameter {name}"
        )));
    }
    let norm = params.grad_norm();
    let scale = if norm > clip { clip / norm } else { 1.0 };
    for (_, p) in params.iter_mut() {
        let step = lr * scale;
        for (v, g) in p.value.as_mut_slice().iter_mut().zip(p.grad.as_slice()) {
            *v -= step * g;
        }
        p.grad.fill(0.0);
    }
    Ok(())
}
