use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::lexicon::GoldToken;
use crate::corpus::stream::{preprocess, CharStream};
use crate::error::{Error, Result};

/// One gold token over the stream: positions `start..end` (end exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub tag: String,
}

/// Whitespace-free stream plus gold token boundaries and paragraph spans.
///
/// `boundary[i]` is true iff position `i` is the last character of a gold
/// token; punctuation marks count as tokens of their own, so a word directly
/// followed by punctuation still carries a boundary on its final character.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedCorpus {
    pub stream: CharStream,
    pub boundary: Vec<bool>,
    pub token_spans: Vec<TokenSpan>,
    /// Paragraph spans over stream positions; one paragraph per source line.
    pub paragraphs: Vec<(usize, usize)>,
}

impl AlignedCorpus {
    pub fn token_count(&self) -> usize {
        self.token_spans.len()
    }

    /// Index of the token covering stream position `i`.
    pub fn token_index_at(&self, i: usize) -> usize {
        match self
            .token_spans
            .binary_search_by(|s| {
                if i < s.start {
                    std::cmp::Ordering::Greater
                } else if i >= s.end {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Equal
                }
            }) {
            Ok(idx) => idx,
            Err(_) => unreachable!("token spans tile the stream"),
        }
    }

    /// Rebuild a corpus from a subset of paragraphs, in the given order.
    pub fn from_paragraphs(&self, ids: &[usize]) -> AlignedCorpus {
        let mut chars = Vec::new();
        let mut offsets = Vec::new();
        let mut boundary = Vec::new();
        let mut token_spans = Vec::new();
        let mut paragraphs = Vec::new();

        for &pid in ids {
            let (pstart, pend) = self.paragraphs[pid];
            let new_start = chars.len();
            chars.extend_from_slice(&self.stream.chars()[pstart..pend]);
            offsets.extend_from_slice(&self.stream.origin_offsets()[pstart..pend]);
            boundary.extend_from_slice(&self.boundary[pstart..pend]);
            for span in &self.token_spans {
                if span.start >= pstart && span.end <= pend {
                    token_spans.push(TokenSpan {
                        start: span.start - pstart + new_start,
                        end: span.end - pstart + new_start,
                        surface: span.surface.clone(),
                        tag: span.tag.clone(),
                    });
                }
            }
            paragraphs.push((new_start, chars.len()));
        }

        // Origin offsets are no longer globally increasing after reordering;
        // renumber them against the concatenated stream itself.
        let offsets = if offsets.windows(2).all(|w| w[0] < w[1]) {
            offsets
        } else {
            (0..chars.len()).collect()
        };

        AlignedCorpus {
            stream: CharStream::from_parts(chars, offsets),
            boundary,
            token_spans,
            paragraphs,
        }
    }
}

/// Align a gold tokenization against the preprocessed stream of `raw`.
///
/// The concatenation of the preprocessed tokens must reproduce the stream
/// exactly; the first divergent stream position is reported otherwise.
pub fn align_boundaries(raw: &str, tokens: &[GoldToken], keep_punct: bool) -> Result<AlignedCorpus> {
    let stream = preprocess(raw, keep_punct);

    // Paragraph spans: one per raw line, mapped through origin offsets.
    let mut paragraphs = Vec::new();
    let mut pos = 0usize;
    let mut line_start_byte = 0usize;
    for line in raw.split_inclusive('\n') {
        let line_end_byte = line_start_byte + line.len();
        let start = pos;
        while pos < stream.len() && stream.origin_offsets()[pos] < line_end_byte {
            pos += 1;
        }
        if pos > start {
            paragraphs.push((start, pos));
        }
        line_start_byte = line_end_byte;
    }

    let mut boundary = vec![false; stream.len()];
    let mut token_spans = Vec::with_capacity(tokens.len());
    let mut cursor = 0usize;
    for tok in tokens {
        let processed = preprocess(&tok.form, keep_punct);
        if processed.is_empty() {
            continue; // e.g. punctuation-only token with keep_punct=false
        }
        for (k, &c) in processed.chars().iter().enumerate() {
            if cursor + k >= stream.len() || stream.char_at(cursor + k) != c {
                return Err(Error::data(format!(
                    "alignment mismatch at stream position {}: token {:?} does not match stream",
                    cursor + k,
                    tok.form
                )));
            }
        }
        let end = cursor + processed.len();
        token_spans.push(TokenSpan {
            start: cursor,
            end,
            surface: processed.as_string(),
            tag: tok.tag.clone(),
        });
        boundary[end - 1] = true;
        cursor = end;
    }
    if cursor != stream.len() {
        return Err(Error::data(format!(
            "alignment mismatch at stream position {cursor}: tokens exhausted before stream end"
        )));
    }

    for &(_, pend) in &paragraphs {
        if pend > 0 && !boundary[pend - 1] {
            return Err(Error::data(format!(
                "token crosses a paragraph boundary at stream position {pend}"
            )));
        }
    }

    Ok(AlignedCorpus {
        stream,
        boundary,
        token_spans,
        paragraphs,
    })
}

/// Paragraph-level corpus split. Train paragraphs stay in shuffled order.
#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: AlignedCorpus,
    pub dev: AlignedCorpus,
    pub test: AlignedCorpus,
    pub train_paragraphs: Vec<usize>,
    pub dev_paragraphs: Vec<usize>,
    pub test_paragraphs: Vec<usize>,
}

/// Split at paragraph granularity: `dev_fraction`/`test_fraction` of the
/// paragraphs (rounded down, at least one each) go to dev/test; the rest
/// form the training section in seed-shuffled order.
pub fn split_corpus(
    corpus: &AlignedCorpus,
    dev_fraction: f64,
    test_fraction: f64,
    seed: u64,
) -> Result<CorpusSplit> {
    if !(0.0..1.0).contains(&dev_fraction)
        || !(0.0..1.0).contains(&test_fraction)
        || dev_fraction <= 0.0
        || test_fraction <= 0.0
        || dev_fraction + test_fraction >= 1.0
    {
        return Err(Error::config(format!(
            "invalid split fractions dev={dev_fraction} test={test_fraction}"
        )));
    }
    let p = corpus.paragraphs.len();
    let n_dev = (dev_fraction * p as f64).floor() as usize;
    let n_test = (test_fraction * p as f64).floor() as usize;
    if n_dev == 0 || n_test == 0 || n_dev + n_test >= p {
        return Err(Error::data(format!(
            "{p} paragraphs are too few for a {dev_fraction}/{test_fraction} split"
        )));
    }

    let mut ids: Vec<usize> = (0..p).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    // Dev and test keep source order (so origin offsets stay traceable);
    // the training section stays in shuffled order.
    let mut test_ids: Vec<usize> = ids[..n_test].to_vec();
    let mut dev_ids: Vec<usize> = ids[n_test..n_test + n_dev].to_vec();
    let train_ids: Vec<usize> = ids[n_test + n_dev..].to_vec();
    test_ids.sort_unstable();
    dev_ids.sort_unstable();

    Ok(CorpusSplit {
        train: corpus.from_paragraphs(&train_ids),
        dev: corpus.from_paragraphs(&dev_ids),
        test: corpus.from_paragraphs(&test_ids),
        train_paragraphs: train_ids,
        dev_paragraphs: dev_ids,
        test_paragraphs: test_ids,
    })
}
