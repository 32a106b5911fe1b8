use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whitespace-free, lower-cased character stream. Every position keeps the
/// byte offset of its character in the raw source, so any model output can
/// be traced back to the original text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharStream {
    chars: Vec<char>,
    origin_offsets: Vec<usize>,
}

impl CharStream {
    pub fn empty() -> Self {
        CharStream {
            chars: Vec::new(),
            origin_offsets: Vec::new(),
        }
    }

    pub(crate) fn from_parts(chars: Vec<char>, origin_offsets: Vec<usize>) -> Self {
        debug_assert_eq!(chars.len(), origin_offsets.len());
        debug_assert!(origin_offsets.windows(2).all(|w| w[0] < w[1]));
        CharStream {
            chars,
            origin_offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn char_at(&self, i: usize) -> char {
        self.chars[i]
    }

    pub fn origin_offsets(&self) -> &[usize] {
        &self.origin_offsets
    }

    pub fn as_string(&self) -> String {
        self.chars.iter().collect()
    }

    /// Substring over stream positions `start..end`.
    pub fn substring(&self, start: usize, end: usize) -> String {
        self.chars[start..end].iter().collect()
    }

    /// Encode into vocabulary ids (unknown characters map to the unk id).
    pub fn encode(&self, vocab: &super::Vocabulary) -> Vec<u32> {
        self.chars.iter().map(|&c| vocab.id_of(c)).collect()
    }
}

/// Lower-case a character with single-character (simple) case mapping.
/// Characters whose lower-case form expands to several characters (which
/// would break the one-to-one offset alignment) are kept unchanged.
pub(crate) fn fold_char(c: char) -> char {
    let mut it = c.to_lowercase();
    match (it.next(), it.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Strip whitespace, lower-case, and (optionally) drop punctuation.
/// Punctuation here is anything neither alphanumeric nor whitespace.
pub fn preprocess(raw: &str, keep_punct: bool) -> CharStream {
    let mut chars = Vec::new();
    let mut offsets = Vec::new();
    for (off, c) in raw.char_indices() {
        if c.is_whitespace() {
            continue;
        }
        if !keep_punct && !c.is_alphanumeric() {
            continue;
        }
        chars.push(fold_char(c));
        offsets.push(off);
    }
    CharStream::from_parts(chars, offsets)
}

/// Preprocess raw bytes, reporting the byte offset of any encoding error.
pub fn preprocess_bytes(raw: &[u8], keep_punct: bool) -> Result<CharStream> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Ingestion {
        offset: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    Ok(preprocess(text, keep_punct))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_whitespace_and_lowercases() {
        let s = preprocess("Der Baum.", true);
        assert_eq!(s.as_string(), "derbaum.");
    }

    #[test]
    fn empty_input_gives_empty_stream() {
        let s = preprocess("", true);
        assert!(s.is_empty());
        assert!(s.origin_offsets().is_empty());
    }

    #[test]
    fn offsets_trace_back_to_source_bytes() {
        // Hand-traced: "a  b\tc" keeps bytes 0 ('a'), 3 ('b'), 5 ('c').
        let s = preprocess("a  b\tc", true);
        assert_eq!(s.as_string(), "abc");
        assert_eq!(s.origin_offsets(), &[0, 3, 5]);
    }

    #[test]
    fn punctuation_dropped_when_asked() {
        let s = preprocess("a, b. c!", false);
        assert_eq!(s.as_string(), "abc");
        let with = preprocess("a, b. c!", true);
        assert_eq!(with.as_string(), "a,b.c!");
    }

    #[test]
    fn german_sharp_s_and_umlauts_survive_folding() {
        let s = preprocess("Straße ÄPFEL", true);
        assert_eq!(s.as_string(), "straßeäpfel");
    }

    #[test]
    fn invalid_utf8_names_byte_offset() {
        let raw = [b'a', b'b', 0xff, b'c'];
        match preprocess_bytes(&raw, true) {
            Err(Error::Ingestion { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn offsets_strictly_increasing_on_multibyte_text() {
        let s = preprocess("día  nuevo", true);
        assert_eq!(s.as_string(), "díanuevo");
        assert!(s.origin_offsets().windows(2).all(|w| w[0] < w[1]));
    }
}
