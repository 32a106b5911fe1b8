use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::AlignedCorpus;
use crate::error::{Error, Result};

/// One sampled classification position: the final character of `window`
/// sits at `position` in the stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionSample {
    pub position: usize,
    /// True iff the position is the last character of a gold token.
    pub boundary: bool,
    /// The `window` preceding characters ending at (and including) the
    /// position, left-padded with full stops near the stream start.
    pub window: String,
    /// The token (boundary) or token prefix (non-boundary) ending here.
    pub word: String,
}

/// The token-or-prefix strings of a sample set, e.g. for building the
/// exclusion set that keeps a later test sample disjoint from training.
pub fn sample_words(samples: &[PositionSample]) -> HashSet<String> {
    samples.iter().map(|s| s.word.clone()).collect()
}

/// Draw `n` positions, exactly half of them token-final, each carrying its
/// preceding character window. Positions whose token (or token prefix)
/// occurs in `exclusion` are ineligible.
pub fn sample_balanced_positions(
    corpus: &AlignedCorpus,
    n: usize,
    window: usize,
    exclusion: &HashSet<String>,
    seed: u64,
) -> Result<Vec<PositionSample>> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::config(format!("sample size {n} must be even and positive")));
    }
    if corpus.stream.len() <= window {
        return Err(Error::data(format!(
            "corpus of {} characters is not longer than the window {window}",
            corpus.stream.len()
        )));
    }

    let mut pos_pool = Vec::new();
    let mut neg_pool = Vec::new();
    for span in &corpus.token_spans {
        for i in span.start..span.end {
            let word: String = corpus.stream.substring(span.start, i + 1);
            if exclusion.contains(&word) {
                continue;
            }
            if i + 1 == span.end {
                pos_pool.push((i, word));
            } else {
                neg_pool.push((i, word));
            }
        }
    }

    let half = n / 2;
    if pos_pool.len() < half || neg_pool.len() < half {
        return Err(Error::data(format!(
            "insufficient eligible positions: need {half}+{half}, have {} boundary and {} non-boundary",
            pos_pool.len(),
            neg_pool.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos_pool.shuffle(&mut rng);
    neg_pool.shuffle(&mut rng);

    let make = |(i, word): (usize, String), boundary: bool| {
        let mut chars: Vec<char> = Vec::with_capacity(window);
        let start = i as i64 - window as i64 + 1;
        for k in start..=(i as i64) {
            chars.push(if k < 0 {
                '.'
            } else {
                corpus.stream.char_at(k as usize)
            });
        }
        PositionSample {
            position: i,
            boundary,
            window: chars.into_iter().collect(),
            word,
        }
    };

    let mut samples: Vec<PositionSample> = pos_pool
        .into_iter()
        .take(half)
        .map(|p| make(p, true))
        .collect();
    samples.extend(neg_pool.into_iter().take(half).map(|p| make(p, false)));
    Ok(samples)
}
