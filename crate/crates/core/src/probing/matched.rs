//! Stratified matched sampling: draw equal-sized samples from two pools so
//! that a per-item key (typically the character length) has an identical
//! multiset in both samples.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Sample `n` indices from each pool such that the key multisets of the two
/// samples are identical. Keys present in only one pool are unusable; an
/// error reports when the usable intersection cannot supply `n` items.
pub fn stratified_matched_sample<K: Ord + Clone>(
    keys_a: &[K],
    keys_b: &[K],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut by_key_a: BTreeMap<&K, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys_a.iter().enumerate() {
        by_key_a.entry(k).or_default().push(i);
    }
    let mut by_key_b: BTreeMap<&K, Vec<usize>> = BTreeMap::new();
    for (i, k) in keys_b.iter().enumerate() {
        by_key_b.entry(k).or_default().push(i);
    }

    // Usable multiset: each shared key contributes min(count_a, count_b).
    let mut usable: Vec<&K> = Vec::new();
    for (k, ia) in &by_key_a {
        if let Some(ib) = by_key_b.get(k) {
            for _ in 0..ia.len().min(ib.len()) {
                usable.push(k);
            }
        }
    }
    if usable.len() < n {
        return Err(Error::data(format!(
            "matched sampling: only {} items share keys across the pools, need {}",
            usable.len(),
            n
        )));
    }

    usable.shuffle(rng);
    let mut chosen: BTreeMap<&K, usize> = BTreeMap::new();
    for k in usable.into_iter().take(n) {
        *chosen.entry(k).or_insert(0) += 1;
    }

    let mut out_a = Vec::with_capacity(n);
    let mut out_b = Vec::with_capacity(n);
    for (k, count) in chosen {
        let mut ia = by_key_a[k].clone();
        let mut ib = by_key_b[k].clone();
        ia.shuffle(rng);
        ib.shuffle(rng);
        out_a.extend_from_slice(&ia[..count]);
        out_b.extend_from_slice(&ib[..count]);
    }
    Ok((out_a, out_b))
}

/// Length-matched sampling over string pools: both samples come from the
/// intersection length distribution and their length multisets are equal.
pub fn length_matched_sample(
    pool_a: &[String],
    pool_b: &[String],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let ka: Vec<usize> = pool_a.iter().map(|s| s.chars().count()).collect();
    let kb: Vec<usize> = pool_b.iter().map(|s| s.chars().count()).collect();
    stratified_matched_sample(&ka, &kb, n, rng)
}
