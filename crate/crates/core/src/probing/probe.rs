//! Repeated random-split probing: sample a small balanced train set, test on
//! the remainder, aggregate accuracy over splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::probing::logistic::{train_logistic, ProbeExample};

/// Aggregated probe outcome (accuracies in percent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub mean_accuracy: f64,
    pub std_error: f64,
    pub n_splits: usize,
}

impl ProbeResult {
    /// Mean and standard error (sample std over splits divided by √n).
    pub fn from_accuracies(accs: &[f64]) -> Self {
        let n = accs.len();
        let mean = accs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        ProbeResult {
            mean_accuracy: mean,
            std_error,
            n_splits: n,
        }
    }
}

/// Two labeled pools (positive = true label).
#[derive(Debug, Clone, Default)]
pub struct ProbePools {
    pub positive: Vec<ProbeExample>,
    pub negative: Vec<ProbeExample>,
}

impl ProbePools {
    pub fn validate(&self, n_train_per_class: usize) -> Result<()> {
        if self.positive.is_empty() || self.negative.is_empty() {
            return Err(Error::data(
                "constant-label pool: both classes need at least one example",
            ));
        }
        if self.positive.len() <= n_train_per_class || self.negative.len() <= n_train_per_class {
            return Err(Error::data(format!(
                "pools of {}/{} examples cannot supply {} training items per class plus test items",
                self.positive.len(),
                self.negative.len(),
                n_train_per_class
            )));
        }
        Ok(())
    }
}

/// One split: sample `n_train_per_class` per class with the given RNG, train,
/// and return test accuracy over the remainder.
pub fn split_accuracy(
    pools: &ProbePools,
    n_train_per_class: usize,
    l2: f64,
    max_epochs: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut pos_idx: Vec<usize> = (0..pools.positive.len()).collect();
    let mut neg_idx: Vec<usize> = (0..pools.negative.len()).collect();
    pos_idx.shuffle(rng);
    neg_idx.shuffle(rng);

    let train: Vec<&ProbeExample> = pos_idx[..n_train_per_class]
        .iter()
        .map(|&i| &pools.positive[i])
        .chain(neg_idx[..n_train_per_class].iter().map(|&i| &pools.negative[i]))
        .collect();
    let test: Vec<&ProbeExample> = pos_idx[n_train_per_class..]
        .iter()
        .map(|&i| &pools.positive[i])
        .chain(neg_idx[n_train_per_class..].iter().map(|&i| &pools.negative[i]))
        .collect();

    let clf = train_logistic(&train, l2, max_epochs, super::logistic::DEFAULT_TOL)?;
    Ok(clf.accuracy(&test))
}

/// Run the probe over `n_splits` independent splits (parallelized; each
/// split derives its RNG from the seed and the split index, so results do
/// not depend on scheduling).
pub fn run_probe(
    pools: &ProbePools,
    n_train_per_class: usize,
    n_splits: usize,
    l2: f64,
    max_epochs: usize,
    seed: u64,
) -> Result<ProbeResult> {
    if n_splits == 0 {
        return Err(Error::config("n_splits must be at least 1".to_string()));
    }
    pools.validate(n_train_per_class)?;
    let accs: Vec<Result<f64>> = par::map_indexed(n_splits, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64 + 1);
        split_accuracy(pools, n_train_per_class, l2, max_epochs, &mut rng)
    });
    let accs: Vec<f64> = accs.into_iter().collect::<Result<_>>()?;
    Ok(ProbeResult::from_accuracies(&accs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gaussian_pools(n: usize, sep: f64, dim: usize, seed: u64) -> ProbePools {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pools = ProbePools::default();
        for i in 0..n {
            let label = i % 2 == 0;
            let center = if label { sep } else { -sep };
            let repr: Vec<f64> = (0..dim)
                .map(|d| {
                    if d == 0 {
                        center + rng.gen_range(-1.0..1.0)
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect();
            let e = ProbeExample::new(repr, label, format!("w{i}"));
            if label {
                pools.positive.push(e);
            } else {
                pools.negative.push(e);
            }
        }
        pools
    }

    #[test]
    fn one_split_reduces_to_one_evaluation() {
        let pools = gaussian_pools(60, 2.0, 3, 1);
        let r = run_probe(&pools, 10, 1, 1e-3, 500, 7).unwrap();
        assert_eq!(r.n_splits, 1);
        assert_eq!(r.std_error, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        rng.set_stream(1);
        let direct = split_accuracy(&pools, 10, 1e-3, 500, &mut rng).unwrap();
        assert_eq!(r.mean_accuracy, direct);
    }

    #[test]
    fn constant_label_pool_is_an_error() {
        let mut pools = gaussian_pools(20, 1.0, 2, 2);
        pools.negative.clear();
        assert!(run_probe(&pools, 5, 3, 1e-3, 100, 1).is_err());
    }

    #[test]
    fn separable_pools_probe_high_and_shuffled_labels_probe_at_chance() {
        let pools = gaussian_pools(120, 3.0, 4, 3);
        let r = run_probe(&pools, 10, 20, 1e-3, 500, 11).unwrap();
        assert!(r.mean_accuracy > 90.0, "{}", r.mean_accuracy);

        // Shuffle labels: reassign examples to pools at random.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let all: Vec<ProbeExample> = pools
            .positive
            .into_iter()
            .chain(pools.negative)
            .collect();
        let mut shuffled = ProbePools::default();
        for e in all {
            if rng.gen_bool(0.5) {
                shuffled.positive.push(ProbeExample::new(e.repr, true, e.form));
            } else {
                shuffled.negative.push(ProbeExample::new(e.repr, false, e.form));
            }
        }
        let r = run_probe(&shuffled, 10, 40, 1e-3, 500, 13).unwrap();
        // Within 3 standard errors of chance (plus a floor for tiny SEs).
        let band = (3.0 * r.std_error).max(6.0);
        assert!(
            (r.mean_accuracy - 50.0).abs() < band,
            "mean {} se {}",
            r.mean_accuracy,
            r.std_error
        );
    }

    #[test]
    fn std_error_matches_direct_recomputation() {
        let accs = [60.0, 70.0, 80.0, 50.0, 65.0];
        let r = ProbeResult::from_accuracies(&accs);
        let mean: f64 = accs.iter().sum::<f64>() / 5.0;
        let var: f64 = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 4.0;
        let se = var.sqrt() / (5.0f64).sqrt();
        assert_eq!(r.mean_accuracy, mean);
        assert!((r.std_error - se).abs() < 1e-12);
    }

    #[test]
    fn probe_is_deterministic_for_a_seed() {
        let pools = gaussian_pools(80, 1.5, 3, 5);
        let a = run_probe(&pools, 8, 10, 1e-3, 300, 21).unwrap();
        let b = run_probe(&pools, 8, 10, 1e-3, 300, 21).unwrap();
        assert_eq!(a, b);
    }
}
