//! Count-based baseline over the unsegmented character stream: n-gram
//! counts, most-frequent-prefix prediction, and attestation lookup.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::CharStream;
use crate::error::{Error, Result};

/// Sliding-window character n-gram counts for all orders 1..=n.
#[derive(Debug, Clone)]
pub struct NgramTable {
    n: usize,
    counts: HashMap<String, u64>,
    /// Total unigram count (= stream length).
    total: u64,
}

impl NgramTable {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, gram: &str) -> u64 {
        self.counts.get(gram).copied().unwrap_or(0)
    }

    /// All stored grams of one order, e.g. for comparison against a
    /// brute-force recount.
    pub fn grams_of_order(&self, k: usize) -> HashMap<String, u64> {
        self.counts
            .iter()
            .filter(|(g, _)| g.chars().count() == k)
            .map(|(g, c)| (g.clone(), *c))
            .collect()
    }
}

/// Count all n-grams of orders 1..=n over the whitespace-free stream.
pub fn count_ngrams(stream: &CharStream, n: usize) -> Result<NgramTable> {
    if n == 0 {
        return Err(Error::config("n-gram order must be at least 1"));
    }
    let chars = stream.chars();
    let mut counts: HashMap<String, u64> = HashMap::new();
    for k in 1..=n {
        if chars.len() < k {
            break;
        }
        for w in chars.windows(k) {
            *counts.entry(w.iter().collect()).or_insert(0) += 1;
        }
    }
    Ok(NgramTable {
        n,
        counts,
        total: chars.len() as u64,
    })
}

/// Predict which candidate most frequently precedes `continuation`:
/// each candidate is scored by the count of `candidate ⧺ continuation`
/// truncated to the table order. If every candidate scores zero at that
/// order, the key is shortened one character at a time (the longest stored
/// prefix wins); full ties are broken uniformly with the seeded RNG.
pub fn predict_prefix(
    table: &NgramTable,
    candidates: &[String],
    continuation: &str,
    seed: u64,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::config("predict_prefix needs at least one candidate"));
    }
    let keys: Vec<Vec<char>> = candidates
        .iter()
        .map(|c| c.chars().chain(continuation.chars()).collect())
        .collect();

    let max_len = keys.iter().map(|k| k.len()).max().unwrap_or(0);
    let mut order = table.order().min(max_len);
    let counts: Vec<u64> = loop {
        let counts: Vec<u64> = keys
            .iter()
            .map(|k| {
                let take = order.min(k.len());
                let gram: String = k[..take].iter().collect();
                table.count(&gram)
            })
            .collect();
        if counts.iter().any(|&c| c > 0) || order <= 1 {
            break counts;
        }
        order -= 1;
    };

    let best = *counts.iter().max().unwrap();
    let winners: Vec<usize> = counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c == best)
        .map(|(i, _)| i)
        .collect();
    if winners.len() == 1 {
        return Ok(winners[0]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(winners[rng.gen_range(0..winners.len())])
}

/// Substring attestation over the whitespace-free stream. The empty phrase
/// is attested by convention.
pub fn is_attested(stream: &CharStream, phrase: &str) -> bool {
    let needle: Vec<char> = phrase.chars().collect();
    if needle.is_empty() {
        return true;
    }
    stream
        .chars()
        .windows(needle.len())
        .any(|w| w == needle.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::preprocess;
    use rand::Rng;

    #[test]
    fn counts_on_tiny_stream() {
        let t = count_ngrams(&preprocess("aaa", true), 2).unwrap();
        let bigrams = t.grams_of_order(2);
        assert_eq!(bigrams.len(), 1);
        assert_eq!(bigrams["aa"], 2);
        assert_eq!(t.count("a"), 3);
        assert_eq!(t.total(), 3);
    }

    #[test]
    fn stream_shorter_than_order_has_no_high_order_grams() {
        let t = count_ngrams(&preprocess("ab", true), 5).unwrap();
        assert!(t.grams_of_order(5).is_empty());
        assert!(t.grams_of_order(3).is_empty());
        assert_eq!(t.count("ab"), 1);
    }

    #[test]
    fn counts_match_naive_dictionary_on_random_strings() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let len = rng.gen_range(1..60);
            let s: String = (0..len)
                .map(|_| (b'a' + rng.gen_range(0..3u8)) as char)
                .collect();
            let stream = preprocess(&s, true);
            let n = rng.gen_range(1..5);
            let t = count_ngrams(&stream, n).unwrap();
            // Naive oracle: count every substring of every order directly.
            let chars: Vec<char> = s.chars().collect();
            for k in 1..=n {
                let mut naive: HashMap<String, u64> = HashMap::new();
                for i in 0..chars.len().saturating_sub(k - 1) {
                    let g: String = chars[i..i + k].iter().collect();
                    *naive.entry(g).or_insert(0) += 1;
                }
                assert_eq!(t.grams_of_order(k), naive, "order {k} on {s:?}");
            }
        }
    }

    #[test]
    fn argmax_prefers_frequent_prefix() {
        // "derb" seen 5 times, "dieb" once.
        let s = "derb".repeat(5) + "dieb";
        let t = count_ngrams(&preprocess(&s, true), 4).unwrap();
        let cands = vec!["der".to_string(), "die".to_string()];
        let got = predict_prefix(&t, &cands, "baum", 0).unwrap();
        assert_eq!(got, 0);
    }

    #[test]
    fn all_zero_counts_pick_uniformly_at_chance() {
        let t = count_ngrams(&preprocess("xxxx", true), 3).unwrap();
        let cands = vec!["der".into(), "die".into(), "das".into()];
        let mut hits = [0usize; 3];
        let trials = 9_000;
        for seed in 0..trials {
            hits[predict_prefix(&t, &cands, "qqq", seed as u64).unwrap()] += 1;
        }
        // Each candidate should win about a third of the time.
        for h in hits {
            let frac = h as f64 / trials as f64;
            assert!((frac - 1.0 / 3.0).abs() < 0.03, "frac={frac}");
        }
    }

    #[test]
    fn tie_counts_split_evenly_over_seeds() {
        // Monte-Carlo oracle: with equal counts the tie-break must be
        // uniform over 10^4 seeded trials.
        let s = "derx".repeat(7) + &"diex".repeat(7);
        let t = count_ngrams(&preprocess(&s, true), 4).unwrap();
        let cands = vec!["der".to_string(), "die".to_string()];
        let mut first = 0usize;
        let trials = 10_000;
        for seed in 0..trials {
            if predict_prefix(&t, &cands, "xqqq", seed as u64).unwrap() == 0 {
                first += 1;
            }
        }
        let frac = first as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.02, "frac={frac}");
    }

    #[test]
    fn argmax_invariant_under_count_scaling() {
        // Build two streams where one repeats the other 3 times: all counts
        // scale by 3 and the argmax must not change.
        let base = "derbaumdiebaumderbaumdasxyz";
        let t1 = count_ngrams(&preprocess(base, true), 5).unwrap();
        let t3 = count_ngrams(&preprocess(&base.repeat(3), true), 5).unwrap();
        let cands = vec!["der".to_string(), "die".to_string(), "das".to_string()];
        for seed in 0..20 {
            assert_eq!(
                predict_prefix(&t1, &cands, "baum", seed).unwrap(),
                predict_prefix(&t3, &cands, "baum", seed).unwrap()
            );
        }
    }

    #[test]
    fn attestation_matches_naive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let len = rng.gen_range(5..80);
            let s: String = (0..len)
                .map(|_| (b'a' + rng.gen_range(0..2u8)) as char)
                .collect();
            let stream = preprocess(&s, true);
            let qlen = rng.gen_range(1..6);
            let q: String = (0..qlen)
                .map(|_| (b'a' + rng.gen_range(0..2u8)) as char)
                .collect();
            assert_eq!(is_attested(&stream, &q), s.contains(&q), "{q:?} in {s:?}");
        }
        let stream = preprocess("abc", true);
        assert!(is_attested(&stream, ""));
        assert!(is_attested(&stream, "bc"));
        assert!(!is_attested(&stream, "ca"));
    }
}
