use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::CharStream;
use crate::error::{Error, Result};

/// Frequency-ranked character inventory with a dedicated unknown id.
///
/// Ids are dense: symbol `i` has id `i`, and the unknown symbol takes the
/// next id after the last ranked symbol, so the logit dimension of a model
/// over this vocabulary is `total_ids()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    symbols: Vec<char>,
    threshold: u64,
    #[serde(skip)]
    index: HashMap<char, u32>,
}

impl Vocabulary {
    pub fn from_symbols(symbols: Vec<char>, threshold: u64) -> Self {
        let index = symbols
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32))
            .collect();
        Vocabulary {
            symbols,
            threshold,
            index,
        }
    }

    /// Rebuild the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .symbols
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32))
            .collect();
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn unk_id(&self) -> u32 {
        self.symbols.len() as u32
    }

    /// Number of ids a model over this vocabulary emits (symbols + unk).
    pub fn total_ids(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn id_of(&self, c: char) -> u32 {
        self.index.get(&c).copied().unwrap_or_else(|| self.unk_id())
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    /// The character for an id; `None` for the unk id.
    pub fn char_of(&self, id: u32) -> Option<char> {
        self.symbols.get(id as usize).copied()
    }

    /// Encode a string (whitespace and case untouched; preprocess first).
    pub fn encode_str(&self, s: &str) -> Vec<u32> {
        s.chars().map(|c| self.id_of(c)).collect()
    }
}

/// Build the vocabulary of all characters occurring at least `threshold`
/// times in the stream, ranked by descending frequency with ties broken by
/// code point.
pub fn build_vocabulary(stream: &CharStream, threshold: u64) -> Result<Vocabulary> {
    if stream.is_empty() {
        return Err(Error::data("cannot build a vocabulary from an empty stream"));
    }
    let mut counts: HashMap<char, u64> = HashMap::new();
    for &c in stream.chars() {
        *counts.entry(c).or_insert(0) += 1;
    }
    let mut ranked: Vec<(char, u64)> = counts.into_iter().filter(|&(_, n)| n >= threshold).collect();
    if ranked.is_empty() {
        return Err(Error::config(format!(
            "frequency threshold {threshold} eliminates every symbol"
        )));
    }
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(Vocabulary::from_symbols(
        ranked.into_iter().map(|(c, _)| c).collect(),
        threshold,
    ))
}

/// Fraction of stream positions that map to unk; errors if it exceeds
/// `ceiling` (e.g. 0.001 for 0.1%).
pub fn check_coverage(stream: &CharStream, vocab: &Vocabulary, ceiling: f64) -> Result<f64> {
    if stream.is_empty() {
        return Ok(0.0);
    }
    let unk = stream.chars().iter().filter(|c| !vocab.contains(**c)).count();
    let frac = unk as f64 / stream.len() as f64;
    if frac > ceiling {
        return Err(Error::data(format!(
            "unk fraction {frac:.6} exceeds ceiling {ceiling:.6}"
        )));
    }
    Ok(frac)
}
