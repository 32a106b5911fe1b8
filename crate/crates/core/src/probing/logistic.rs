//! Shallow diagnostic classifier: L2-regularized logistic regression fit by
//! full-batch gradient descent to a fixed loss tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labeled representation.
#[derive(Debug, Clone)]
pub struct ProbeExample {
    pub repr: Vec<f64>,
    pub label: bool,
    pub form: String,
    pub meta: std::collections::BTreeMap<String, String>,
}

impl ProbeExample {
    pub fn new(repr: Vec<f64>, label: bool, form: impl Into<String>) -> Self {
        ProbeExample {
            repr,
            label,
            form: form.into(),
            meta: Default::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticClassifier {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) > 0.0
    }

    pub fn accuracy(&self, examples: &[&ProbeExample]) -> f64 {
        if examples.is_empty() {
            return f64::NAN;
        }
        let hits = examples
            .iter()
            .filter(|e| self.predict(&e.repr) == e.label)
            .count();
        100.0 * hits as f64 / examples.len() as f64
    }
}

/// ln(1 + exp(-t)) without overflow.
fn log1p_exp_neg(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Regularized mean loss and gradient.
fn loss_grad(
    examples: &[&ProbeExample],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = examples.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for e in examples {
        let s: f64 = w.iter().zip(&e.repr).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
        let y = if e.label { 1.0 } else { -1.0 };
        loss += log1p_exp_neg(y * s);
        let c = -y * sigmoid(-y * s) / n;
        for (g, xi) in gw.iter_mut().zip(&e.repr) {
            *g += c * xi;
        }
        gb += c;
    }
    loss /= n;
    for (g, wi) in gw.iter_mut().zip(w) {
        *g += l2 * wi;
        loss += 0.5 * l2 * wi * wi;
    }
    (loss, gw, gb)
}

/// Fit by full-batch gradient descent with a backtracking step size, until
/// the loss improves by less than `tol` (or `max_epochs` passes).
pub fn train_logistic(
    examples: &[&ProbeExample],
    l2: f64,
    max_epochs: usize,
    tol: f64,
) -> Result<LogisticClassifier> {
    if examples.is_empty() {
        return Err(Error::data("cannot train a classifier on no examples"));
    }
    let n_pos = examples.iter().filter(|e| e.label).count();
    if n_pos == 0 || n_pos == examples.len() {
        return Err(Error::data(
            "degenerate training set: all examples carry the same label",
        ));
    }
    let dim = examples[0].repr.len();
    if examples.iter().any(|e| e.repr.len() != dim) {
        return Err(Error::shape("probe examples have mixed representation widths".to_string()));
    }

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut lr = 1.0;
    let (mut loss, mut gw, mut gb) = loss_grad(examples, &w, b, l2);
    for _ in 0..max_epochs {
        // Backtracking: shrink the step until the loss decreases.
        let mut accepted = false;
        for _ in 0..40 {
            let w_try: Vec<f64> = w.iter().zip(&gw).map(|(wi, g)| wi - lr * g).collect();
            let b_try = b - lr * gb;
            let (loss_try, gw_try, gb_try) = loss_grad(examples, &w_try, b_try, l2);
            if loss_try <= loss {
                let improved = loss - loss_try;
                w = w_try;
                b = b_try;
                gw = gw_try;
                gb = gb_try;
                let converged = improved < tol;
                loss = loss_try;
                lr *= 1.2;
                accepted = true;
                if converged {
                    return Ok(LogisticClassifier { weights: w, bias: b });
                }
                break;
            }
            lr *= 0.5;
        }
        if !accepted {
            break; // step size underflow: as converged as f64 allows
        }
    }
    Ok(LogisticClassifier { weights: w, bias: b })
}

/// Default hyperparameters for diagnostic probes.
pub const DEFAULT_L2: f64 = 1e-3;
pub const DEFAULT_MAX_EPOCHS: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-6;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ex(repr: &[f64], label: bool) -> ProbeExample {
        ProbeExample::new(repr.to_vec(), label, "x")
    }

    #[test]
    fn separable_two_points_reach_full_train_accuracy() {
        let pool = vec![ex(&[1.0], true), ex(&[-1.0], false)];
        let refs: Vec<&ProbeExample> = pool.iter().collect();
        let clf = train_logistic(&refs, 1e-3, 2000, 1e-6).unwrap();
        assert_eq!(clf.accuracy(&refs), 100.0);
    }

    #[test]
    fn single_class_pool_is_an_error() {
        let pool = vec![ex(&[1.0], true), ex(&[2.0], true)];
        let refs: Vec<&ProbeExample> = pool.iter().collect();
        assert!(train_logistic(&refs, 1e-3, 100, 1e-6).is_err());
    }

    #[test]
    fn labels_independent_of_features_stay_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let train: Vec<ProbeExample> = (0..40)
            .map(|i| {
                ex(
                    &[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    i % 2 == 0,
                )
            })
            .collect();
        let test: Vec<ProbeExample> = (0..400)
            .map(|i| {
                ex(
                    &[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    i % 2 == 0,
                )
            })
            .collect();
        let refs: Vec<&ProbeExample> = train.iter().collect();
        let clf = train_logistic(&refs, 1e-3, 500, 1e-6).unwrap();
        let trefs: Vec<&ProbeExample> = test.iter().collect();
        let acc = clf.accuracy(&trefs);
        assert!((acc - 50.0).abs() < 12.0, "acc={acc}");
    }

    /// Exhaustive oracle on 2-D toy data: grid-search every direction and
    /// offset; the logistic fit must reach the same optimal train accuracy.
    #[test]
    fn matches_grid_search_separator_on_2d_toys() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..5 {
            let pool: Vec<ProbeExample> = (0..14)
                .map(|_| {
                    let label = rng.gen_bool(0.5);
                    let cx = if label { 0.8 } else { -0.8 };
                    ex(
                        &[
                            cx + rng.gen_range(-0.5..0.5),
                            rng.gen_range(-1.0..1.0) * 0.5,
                        ],
                        label,
                    )
                })
                .collect();
            if pool.iter().all(|e| e.label) || pool.iter().all(|e| !e.label) {
                continue;
            }
            let refs: Vec<&ProbeExample> = pool.iter().collect();

            let mut best = 0usize;
            for ai in 0..360 {
                let a = (ai as f64).to_radians();
                let (wx, wy) = (a.cos(), a.sin());
                let mut scores: Vec<f64> = refs
                    .iter()
                    .map(|e| wx * e.repr[0] + wy * e.repr[1])
                    .collect();
                scores.sort_by(|p, q| p.partial_cmp(q).unwrap());
                let mut offsets = vec![scores[0] - 1.0];
                offsets.extend(scores.windows(2).map(|w| (w[0] + w[1]) / 2.0));
                offsets.push(scores[scores.len() - 1] + 1.0);
                for off in offsets {
                    let hits = refs
                        .iter()
                        .filter(|e| (wx * e.repr[0] + wy * e.repr[1] > off) == e.label)
                        .count();
                    best = best.max(hits);
                }
            }
            // Tiny l2 so regularization cannot hold accuracy back.
            let clf = train_logistic(&refs, 1e-6, 5000, 1e-9).unwrap();
            let acc = clf.accuracy(&refs);
            let best_acc = 100.0 * best as f64 / refs.len() as f64;
            // Separable by construction: the grid optimum is 100% and the
            // logistic fit must reach it exactly.
            assert_eq!(best_acc, 100.0, "case {case}: oracle should separate");
            assert_eq!(acc, best_acc, "case {case}: logistic {acc} vs grid {best_acc}");
        }
    }

    #[test]
    fn decision_invariant_under_shared_score_shift() {
        // Viewing the binary decision as argmax over two class scores
        // (s, 0): adding a constant to both leaves the decision unchanged.
        let clf = LogisticClassifier {
            weights: vec![0.7, -0.2],
            bias: 0.1,
        };
        for x in [[0.3, 0.4], [-1.0, 0.2], [0.0, 0.0]] {
            let s = clf.score(&x);
            for c in [-5.0, 0.0, 13.0] {
                let (a, b) = (s + c, c);
                assert_eq!(a > b, clf.predict(&x));
            }
        }
    }
}
