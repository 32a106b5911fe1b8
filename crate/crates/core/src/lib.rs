//! Character-level neural language models trained on unsegmented text, and
//! the probing suites that ask what they learned about words.
//!
//! The crate is organized around a pipeline:
//!
//! 1. [`corpus`] — ingest raw text, strip whitespace, align gold token
//!    boundaries, build character vocabularies, split into sections.
//! 2. [`nn`] — the numeric core: tensors, recurrent cells with hand-written
//!    gradients, losses, SGD, and a finite-difference gradient checker.
//! 3. [`lm`] — LSTM/RNN character models, a word-level model and a character
//!    autoencoder; truncated-BPTT training, scoring, tracing, checkpoints.
//! 4. [`ngram`] — count-based baseline over the unsegmented stream.
//! 5. [`probing`], [`boundary`], [`syntax`], [`phonotactics`] — the
//!    evaluation suites run against frozen checkpoints.
//!
//! All randomness is seeded and all parallel code paths produce results that
//! are bit-identical to the sequential fallback (enable/disable via the
//! `parallel` feature).

pub mod boundary;
pub mod corpus;
pub mod error;
pub mod hash;
pub mod lm;
pub mod ngram;
pub mod nn;
pub mod par;
pub mod phonotactics;
pub mod probing;
pub mod reference;
pub mod synthlang;
pub mod syntax;

pub use error::{Error, Result};
