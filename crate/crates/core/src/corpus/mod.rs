//! Corpus ingestion: whitespace-free character streams aligned with gold
//! token boundaries, character vocabularies, tagged lexica and splits.
//!
//! Raw corpora are UTF-8 text with one paragraph per line. Gold tokenizations
//! and lexica share one TSV schema (columns `form`, `lemma`, `pos`, `morph`,
//! `frequency`, header required) so a tagged token file doubles as a lexicon
//! source.

mod aligned;
mod lexicon;
mod sample;
mod stream;
mod vocab;

pub use aligned::{align_boundaries, split_corpus, AlignedCorpus, CorpusSplit, TokenSpan};
pub use lexicon::{read_lexicon, read_lexicon_file, write_lexicon, GoldToken, LexiconEntry};
pub use sample::{sample_balanced_positions, sample_words, PositionSample};
pub use stream::{preprocess, preprocess_bytes, CharStream};
pub use vocab::{build_vocabulary, check_coverage, Vocabulary};
