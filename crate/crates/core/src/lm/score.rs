//! Scoring, tracing and word representations over frozen checkpoints.
//!
//! All scoring walks the net one id at a time with the hidden state carried
//! across the whole sequence. A left context conditions the model but never
//! contributes to the returned likelihood. Before the first id of an
//! independent sequence the model is fed the checkpoint's bootstrap id (the
//! full-stop character when in vocabulary), so the first real symbol has a
//! well-defined conditional probability.

use crate::error::{Error, Result};
use crate::lm::checkpoint::{Checkpoint, VocabKind};
use crate::lm::net::{NetState, RecurrentNet};
use crate::nn::loss::log_prob;
use crate::nn::ParamSet;

/// A log-likelihood in both bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreValue {
    pub nats: f64,
    pub bits: f64,
}

impl ScoreValue {
    fn from_nats(nats: f64) -> Self {
        ScoreValue {
            nats,
            bits: nats / std::f64::consts::LN_2,
        }
    }
}

/// Anything that can assign a log-likelihood to a string in context: frozen
/// checkpoints, and oracle scorers used to validate the harnesses.
pub trait SequenceScorer: Sync {
    /// Natural-log likelihood of `text` given `context` to its left.
    fn log_likelihood(&self, text: &str, context: &str) -> Result<f64>;

    /// True when every scoring unit of `text` is in-vocabulary. Word-level
    /// models return false for OOV tokens; character models always cover.
    fn covers(&self, text: &str) -> bool {
        let _ = text;
        true
    }
}

impl SequenceScorer for Checkpoint {
    fn log_likelihood(&self, text: &str, context: &str) -> Result<f64> {
        match &self.vocab {
            VocabKind::Char(_) => Ok(score(self, text, context)?.nats),
            VocabKind::Word(_) => {
                let toks: Vec<String> = text.split_whitespace().map(str::to_string).collect();
                let ctx: Vec<String> = context.split_whitespace().map(str::to_string).collect();
                Ok(score_tokens(self, &toks, &ctx)?.nats)
            }
        }
    }

    fn covers(&self, text: &str) -> bool {
        match &self.vocab {
            VocabKind::Char(_) => true,
            VocabKind::Word(v) => text.split_whitespace().all(|t| v.contains(t)),
        }
    }
}

/// Sum of per-id conditional log-probabilities (nats) of `ids` after the
/// model has consumed `bootstrap` and then `context_ids`.
pub fn score_ids(
    net: &RecurrentNet,
    params: &ParamSet,
    ids: &[u32],
    context_ids: &[u32],
    bootstrap: u32,
) -> Result<f64> {
    let mut state = NetState::zeros(&net.dims, 1);
    let mut logits = vec![0.0; net.dims.vocab];
    net.eval_step(params, &mut state, bootstrap, &mut logits)?;
    for &c in context_ids {
        net.eval_step(params, &mut state, c, &mut logits)?;
    }
    let mut total = 0.0;
    for &id in ids {
        total += log_prob(&logits, id as usize)?;
        net.eval_step(params, &mut state, id, &mut logits)?;
    }
    Ok(total)
}

fn encode_with_warning(ckpt: &Checkpoint, text: &str) -> Result<Vec<u32>> {
    let vocab = ckpt.char_vocab()?;
    let mut unk = 0usize;
    let ids = text
        .chars()
        .map(|c| {
            if !vocab.contains(c) {
                unk += 1;
            }
            vocab.id_of(c)
        })
        .collect();
    if unk > 0 {
        log::warn!("{unk} of {} characters mapped to unk while scoring {text:?}", text.chars().count());
    }
    Ok(ids)
}

/// Log-likelihood of `text` after `context`, for character models.
/// The empty string scores exactly zero.
pub fn score(ckpt: &Checkpoint, text: &str, context: &str) -> Result<ScoreValue> {
    let net = ckpt.net()?;
    let ids = encode_with_warning(ckpt, text)?;
    let ctx = encode_with_warning(ckpt, context)?;
    if ids.is_empty() {
        return Ok(ScoreValue::from_nats(0.0));
    }
    let nats = score_ids(&net, &ckpt.params, &ids, &ctx, ckpt.bootstrap_id())?;
    Ok(ScoreValue::from_nats(nats))
}

/// Log-likelihood of a token sequence for word-level models; OOV tokens map
/// to unk and still contribute to the sum.
pub fn score_tokens(ckpt: &Checkpoint, tokens: &[String], context: &[String]) -> Result<ScoreValue> {
    let net = ckpt.net()?;
    let vocab = ckpt.word_vocab()?;
    if tokens.is_empty() {
        return Ok(ScoreValue::from_nats(0.0));
    }
    let ids = vocab.encode(tokens);
    let ctx = vocab.encode(context);
    let nats = score_ids(&net, &ckpt.params, &ids, &ctx, ckpt.bootstrap_id())?;
    Ok(ScoreValue::from_nats(nats))
}

/// Per-position activations of every recurrent layer while scoring a string.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub chars: Vec<char>,
    /// h\[pos\]\[layer\]\[unit\] after consuming the character at `pos`.
    pub h: Vec<Vec<Vec<f64>>>,
    /// c\[pos\]\[layer\]\[unit\] for LSTM models, empty for RNNs.
    pub c: Vec<Vec<Vec<f64>>>,
    /// Natural-log probability of each observed character.
    pub log_probs: Vec<f64>,
}

/// Trace a string: consume `context` (conditioning only), then record the
/// hidden state of every layer and the log-probability of each character.
pub fn trace(ckpt: &Checkpoint, text: &str, context: &str) -> Result<TraceRecord> {
    let net = ckpt.net()?;
    let ids = encode_with_warning(ckpt, text)?;
    let ctx = encode_with_warning(ckpt, context)?;
    let lstm = net.dims.lstm;

    let mut state = NetState::zeros(&net.dims, 1);
    let mut logits = vec![0.0; net.dims.vocab];
    net.eval_step(&ckpt.params, &mut state, ckpt.bootstrap_id(), &mut logits)?;
    for &c in &ctx {
        net.eval_step(&ckpt.params, &mut state, c, &mut logits)?;
    }

    let mut rec = TraceRecord {
        chars: text.chars().collect(),
        h: Vec::with_capacity(ids.len()),
        c: Vec::with_capacity(if lstm { ids.len() } else { 0 }),
        log_probs: Vec::with_capacity(ids.len()),
    };
    for &id in &ids {
        rec.log_probs.push(log_prob(&logits, id as usize)?);
        net.eval_step(&ckpt.params, &mut state, id, &mut logits)?;
        rec.h.push(state.h.clone());
        if lstm {
            rec.c.push(state.c.clone());
        }
    }
    Ok(rec)
}

/// Implicit word representation: the hidden state after the word's final
/// character. `all_layers` concatenates every layer instead of the top one.
pub fn word_repr(ckpt: &Checkpoint, word: &str, context: &str, all_layers: bool) -> Result<Vec<f64>> {
    if word.is_empty() {
        return Err(Error::data("cannot build a representation of an empty word"));
    }
    let rec = trace(ckpt, word, context)?;
    let last = rec.h.last().expect("non-empty word");
    if all_layers {
        Ok(last.iter().flat_map(|l| l.iter().copied()).collect())
    } else {
        Ok(last.last().expect("at least one layer").clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::testutil::tiny_checkpoint;

    #[test]
    fn empty_string_scores_zero() {
        let ckpt = tiny_checkpoint("abab.", 1);
        let s = score(&ckpt, "", ".").unwrap();
        assert_eq!(s.nats, 0.0);
        assert_eq!(s.bits, 0.0);
    }

    #[test]
    fn chain_rule_additivity_is_exact() {
        let ckpt = tiny_checkpoint("abcabc.", 2);
        for ctx in ["", ".", "cab"] {
            let whole = score(&ckpt, "abca", ctx).unwrap().nats;
            let first = score(&ckpt, "ab", ctx).unwrap().nats;
            let rest = score(&ckpt, "ca", &format!("{ctx}ab")).unwrap().nats;
            assert!((whole - (first + rest)).abs() < 1e-9, "ctx={ctx:?}");
        }
    }

    #[test]
    fn total_probability_mass_sums_to_one() {
        // Brute-force enumeration oracle over every id sequence of length 3
        // (including unk): the chain rule forces the masses to sum to 1.
        let ckpt = tiny_checkpoint("abbbab.", 3);
        let net = ckpt.net().unwrap();
        let v = net.dims.vocab;
        let mut total = 0.0;
        let mut seq = vec![0u32; 3];
        let count = v.pow(3);
        for code in 0..count {
            let mut c = code;
            for s in seq.iter_mut() {
                *s = (c % v) as u32;
                c /= v;
            }
            let nats = score_ids(&net, &ckpt.params, &seq, &[], ckpt.bootstrap_id()).unwrap();
            total += nats.exp();
        }
        assert!((total - 1.0).abs() < 1e-6, "total mass {total}");
    }

    #[test]
    fn trace_has_one_record_per_character() {
        let ckpt = tiny_checkpoint("abab.", 4);
        let rec = trace(&ckpt, "abba", ".").unwrap();
        assert_eq!(rec.h.len(), 4);
        assert_eq!(rec.c.len(), 4);
        assert_eq!(rec.log_probs.len(), 4);
        assert_eq!(rec.h[0].len(), ckpt.config.layers);
        assert_eq!(rec.h[0][0].len(), ckpt.config.hidden_size);
    }

    #[test]
    fn zero_weight_model_traces_all_zero_h() {
        let mut ckpt = tiny_checkpoint("ab.", 5);
        let names: Vec<String> = ckpt.params.names().map(str::to_owned).collect();
        for n in names {
            ckpt.params.get_mut(&n).unwrap().value.fill(0.0);
        }
        let rec = trace(&ckpt, "ab", "").unwrap();
        for pos in &rec.h {
            for layer in pos {
                assert!(layer.iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn word_repr_equals_last_trace_entry_and_is_deterministic() {
        let ckpt = tiny_checkpoint("abcabc.", 6);
        let rec = trace(&ckpt, "cab", ".").unwrap();
        let top = word_repr(&ckpt, "cab", ".", false).unwrap();
        assert_eq!(&top, rec.h.last().unwrap().last().unwrap());
        let again = word_repr(&ckpt, "cab", ".", false).unwrap();
        assert_eq!(top, again);
        let all = word_repr(&ckpt, "cab", ".", true).unwrap();
        assert_eq!(all.len(), ckpt.config.layers * ckpt.config.hidden_size);
        // Context sensitivity: a different left context shifts the vector.
        let other = word_repr(&ckpt, "cab", ".ab", false).unwrap();
        assert_ne!(top, other);
    }
}
