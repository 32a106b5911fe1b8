//! Bits-per-character and perplexity evaluation with full state carry.

use crate::error::{Error, Result};
use crate::lm::checkpoint::Checkpoint;
use crate::lm::net::{NetState, RecurrentNet};
use crate::nn::loss::log_prob;
use crate::nn::ParamSet;

/// Total negative log-likelihood (nats) of `ids`, with the hidden state
/// carried across the whole stream and `bootstrap` fed before the first id.
pub fn stream_nll_nats(
    net: &RecurrentNet,
    params: &ParamSet,
    ids: &[u32],
    bootstrap: u32,
) -> Result<f64> {
    let mut state = NetState::zeros(&net.dims, 1);
    let mut logits = vec![0.0; net.dims.vocab];
    net.eval_step(params, &mut state, bootstrap, &mut logits)?;
    let mut nll = 0.0;
    for &id in ids {
        nll -= log_prob(&logits, id as usize)?;
        net.eval_step(params, &mut state, id, &mut logits)?;
    }
    Ok(nll)
}

/// Bits-per-character over an encoded character stream.
pub fn evaluate_bpc_ids(
    net: &RecurrentNet,
    params: &ParamSet,
    ids: &[u32],
    bootstrap: u32,
) -> Result<f64> {
    if ids.is_empty() {
        return Err(Error::data("cannot evaluate BPC on an empty stream"));
    }
    let nll = stream_nll_nats(net, params, ids, bootstrap)?;
    Ok(nll / std::f64::consts::LN_2 / ids.len() as f64)
}

/// Bits-per-character of a character checkpoint over a stream that uses its
/// vocabulary.
pub fn evaluate_bpc(ckpt: &Checkpoint, stream: &crate::corpus::CharStream) -> Result<f64> {
    let vocab = ckpt.char_vocab()?;
    let ids = stream.encode(vocab);
    evaluate_bpc_ids(&ckpt.net()?, &ckpt.params, &ids, ckpt.bootstrap_id())
}

/// Perplexity of a word checkpoint over a token stream; OOV tokens map to
/// unk and stay in the average.
pub fn evaluate_perplexity(ckpt: &Checkpoint, tokens: &[String]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::data("cannot evaluate perplexity on an empty stream"));
    }
    let vocab = ckpt.word_vocab()?;
    let ids = vocab.encode(tokens);
    let nll = stream_nll_nats(&ckpt.net()?, &ckpt.params, &ids, ckpt.bootstrap_id())?;
    Ok((nll / ids.len() as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, preprocess};
    use crate::lm::checkpoint::VocabKind;
    use crate::lm::config::{LMConfig, ModelKind};
    use crate::lm::net::NetDims;
    use crate::lm::score::score;
    use crate::lm::wordvocab::build_token_vocab;
    use rand::SeedableRng;

    fn zero_checkpoint(corpus: &str, extra_symbols: usize) -> Checkpoint {
        // A vocabulary padded to a chosen size, with all-zero weights: the
        // model is exactly uniform over its output ids. Padding characters
        // are caseless CJK ideographs so folding cannot collide.
        let mut text = corpus.to_string();
        for i in 0..extra_symbols {
            text.push(char::from_u32(0x4e00 + i as u32).unwrap());
        }
        let vocab = build_vocabulary(&preprocess(&text, true), 1).unwrap();
        let config = LMConfig {
            layers: 1,
            embedding_size: 3,
            hidden_size: 4,
            ..LMConfig::default()
        };
        let net = RecurrentNet::new(NetDims::from_config(&config, vocab.total_ids()));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut params = net.init_params(&mut rng);
        let names: Vec<String> = params.names().map(str::to_owned).collect();
        for n in names {
            params.get_mut(&n).unwrap().value.fill(0.0);
        }
        Checkpoint {
            config,
            vocab: VocabKind::Char(vocab),
            params,
            trained_chars: 0,
            dev_bpc_history: Vec::new(),
            rng_seed: 1,
            rng_word_pos: 0,
        }
    }

    #[test]
    fn uniform_model_over_64_ids_has_bpc_6() {
        // 3 corpus symbols + 60 fillers + unk = 64 output ids.
        let ckpt = zero_checkpoint("abc", 60);
        assert_eq!(ckpt.vocab.total_ids(), 64);
        let stream = preprocess("abcabc", true);
        let bpc = evaluate_bpc(&ckpt, &stream).unwrap();
        assert!((bpc - 6.0).abs() < 1e-12, "bpc={bpc}");
    }

    #[test]
    fn empty_stream_is_an_error() {
        let ckpt = zero_checkpoint("ab", 0);
        assert!(evaluate_bpc(&ckpt, &preprocess("", true)).is_err());
    }

    #[test]
    fn bpc_matches_score_sum_exactly() {
        // Internal-consistency oracle: BPC recomputed from score() bits.
        let ckpt = crate::lm::testutil::tiny_checkpoint("abcabcbb.", 9);
        let stream = preprocess("abcbacb", true);
        let bpc = evaluate_bpc(&ckpt, &stream).unwrap();
        let bits = -score(&ckpt, &stream.as_string(), "").unwrap().bits;
        assert!((bpc - bits / stream.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn uniform_word_model_perplexity_equals_vocab() {
        let tokens: Vec<String> = ["the", "cat", "sat"].iter().map(|s| s.to_string()).collect();
        let vocab = build_token_vocab(&tokens, 50).unwrap();
        let config = LMConfig {
            kind: ModelKind::WordLstm,
            layers: 1,
            embedding_size: 3,
            hidden_size: 4,
            ..LMConfig::default()
        };
        let net = RecurrentNet::new(NetDims::from_config(&config, vocab.total_ids()));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut params = net.init_params(&mut rng);
        let names: Vec<String> = params.names().map(str::to_owned).collect();
        for n in names {
            params.get_mut(&n).unwrap().value.fill(0.0);
        }
        let total = vocab.total_ids() as f64;
        let ckpt = Checkpoint {
            config,
            vocab: VocabKind::Word(vocab),
            params,
            trained_chars: 0,
            dev_bpc_history: Vec::new(),
            rng_seed: 2,
            rng_word_pos: 0,
        };
        let ppl = evaluate_perplexity(&ckpt, &tokens).unwrap();
        assert!((ppl - total).abs() < 1e-9, "ppl={ppl} vocab={total}");
        // OOV tokens map to unk and stay in the average.
        let with_oov: Vec<String> = ["the", "unseen"].iter().map(|s| s.to_string()).collect();
        let ppl2 = evaluate_perplexity(&ckpt, &with_oov).unwrap();
        assert!((ppl2 - total).abs() < 1e-9);
    }
}
