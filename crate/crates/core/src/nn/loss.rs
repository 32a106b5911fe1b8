//! Softmax cross-entropy with max-subtraction for stability.

use crate::error::{Error, Result};

/// Writes softmax(logits) into `out`.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        let e = (l - max).exp();
        *o = e;
        sum += e;
    }
    let inv = 1.0 / sum;
    out.iter_mut().for_each(|o| *o *= inv);
}

/// Natural-log probability of `target` under softmax(logits).
pub fn log_prob(logits: &[f64], target: usize) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::data(format!(
            "target id {} out of range for {} logits",
            target,
            logits.len()
        )));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln() + max;
    Ok(logits[target] - log_z)
}

/// Cross-entropy loss (nats) and its gradient wrt the logits.
/// The gradient is softmax(logits) minus the one-hot target.
pub fn softmax_xent(logits: &[f64], target: usize) -> Result<(f64, Vec<f64>)> {
    if target >= logits.len() {
        return Err(Error::data(format!(
            "target id {} out of range for {} logits",
            target,
            logits.len()
        )));
    }
    let mut grad = vec![0.0; logits.len()];
    softmax_into(logits, &mut grad);
    let loss = -grad[target].max(f64::MIN_POSITIVE).ln();
    grad[target] -= 1.0;
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln_v() {
        for v in [2usize, 16, 64] {
            let logits = vec![0.0; v];
            let (loss, _) = softmax_xent(&logits, v / 2).unwrap();
            assert!((loss - (v as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let (loss, grad) = softmax_xent(&[1000.0, 0.0], 0).unwrap();
        assert!(loss.is_finite());
        assert!(loss.abs() < 1e-9);
        assert!(grad.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn target_out_of_range() {
        assert!(softmax_xent(&[0.0, 0.0], 2).is_err());
        assert!(log_prob(&[0.0], 1).is_err());
    }

    /// Naive direct route (no max subtraction) on small logits; with all
    /// |logit| <= 10 nothing overflows and the two routes must agree to
    /// near machine precision.
    #[test]
    fn matches_naive_route_on_small_logits() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.gen_range(2..12);
            let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let t = rng.gen_range(0..n);
            let z: f64 = logits.iter().map(|l| l.exp()).sum();
            let want = -(logits[t].exp() / z).ln();
            let (got, grad) = softmax_xent(&logits, t).unwrap();
            assert!((got - want).abs() / want.abs().max(1.0) < 1e-12);
            // Gradient entries are softmax - onehot.
            for (j, g) in grad.iter().enumerate() {
                let sm = logits[j].exp() / z;
                let expect = if j == t { sm - 1.0 } else { sm };
                assert!((g - expect).abs() < 1e-12);
            }
        }
    }

    /// Frozen high-precision reference values (60-digit decimal arithmetic).
    #[test]
    fn matches_frozen_high_precision_values() {
        let logits = [2.5, -1.25, 0.75, 3.125, -0.5];
        let (l0, _) = softmax_xent(&logits, 0).unwrap();
        let (l3, _) = softmax_xent(&logits, 3).unwrap();
        assert!((l0 - 1.136333389216358379192).abs() < 1e-13);
        assert!((l3 - 0.5113333892163583791918).abs() < 1e-13);
        let big = [100.0, 97.5, -40.0];
        assert!((-log_prob(&big, 1).unwrap() - 2.578889734292549623344).abs() < 1e-13);
    }

    #[test]
    fn softmax_sums_to_one() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.gen_range(1..40);
            let logits: Vec<f64> = (0..n).map(|_| rng.gen_range(-500.0..500.0)).collect();
            let mut out = vec![0.0; n];
            softmax_into(&logits, &mut out);
            let s: f64 = out.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
