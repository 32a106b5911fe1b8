//! Finite-difference gradient verification.
//!
//! The checker perturbs a sampled subset of coordinates of every parameter,
//! recomputes the loss with central differences, and compares against the
//! analytic gradients already stored in the [`ParamSet`].

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::params::ParamSet;

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Maximum relative error over all checked coordinates.
    pub max_rel_err: f64,
    /// Parameter name and flat index of the worst coordinate.
    pub worst_param: String,
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub coords_checked: usize,
}

fn rel_err(a: f64, n: f64) -> f64 {
    let denom = a.abs().max(n.abs()).max(1e-8);
    (a - n).abs() / denom
}

/// Compare the analytic gradients stored in `params` against central finite
/// differences of `loss_fn`. At most `max_coords_per_param` coordinates are
/// checked per parameter (sampled with `seed`).
///
/// `loss_fn` must be a pure function of the parameter values: both gradient
/// computation (done by the caller beforehand) and the re-evaluations here
/// must see the same data, masks and state.
pub fn grad_check<F>(
    params: &mut ParamSet,
    loss_fn: F,
    eps: f64,
    max_coords_per_param: usize,
    seed: u64,
) -> Result<GradCheckReport>
where
    F: Fn(&ParamSet) -> Result<f64>,
{
    let names: Vec<String> = params.names().map(str::to_owned).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        coords_checked: 0,
    };

    for name in names {
        let len = params.get(&name)?.value.len();
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(&mut rng);
        idx.truncate(max_coords_per_param.min(len));
        idx.sort_unstable();

        for i in idx {
            let analytic = params.get(&name)?.grad.as_slice()[i];
            let orig = params.get(&name)?.value.as_slice()[i];

            params.get_mut(&name)?.value.as_mut_slice()[i] = orig + eps;
            let up = loss_fn(params)?;
            params.get_mut(&name)?.value.as_mut_slice()[i] = orig - eps;
            let down = loss_fn(params)?;
            params.get_mut(&name)?.value.as_mut_slice()[i] = orig;

            let numeric = (up - down) / (2.0 * eps);
            let err = rel_err(analytic, numeric);
            report.coords_checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_param = name.clone();
                report.worst_index = i;
                report.worst_analytic = analytic;
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}
