//! Stateful truncated-BPTT training.
//!
//! The id stream is partitioned into `batch_size` contiguous lanes; hidden
//! state is carried across successive windows within each lane and detached
//! at window edges. When a lane is exhausted the position wraps to the lane
//! start with a fresh state. Dev evaluations run every `eval_interval`
//! training characters; a non-improving dev BPC multiplies the learning
//! rate by `decay`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CharStream, Vocabulary};
use crate::error::{Error, Result};
use crate::lm::checkpoint::{Checkpoint, VocabKind};
use crate::lm::config::{LMConfig, ModelKind, TrainOptions};
use crate::lm::eval::evaluate_bpc_ids;
use crate::lm::net::{DropoutPlan, NetDims, NetState, RecurrentNet};
use crate::lm::wordvocab::build_token_vocab;
use crate::nn::sgd_step;

struct Lanes {
    ids: Vec<u32>,
    lane_len: usize,
    batch: usize,
}

impl Lanes {
    fn new(ids: Vec<u32>, batch: usize, bptt: usize) -> Result<Self> {
        if ids.len() < batch * bptt {
            return Err(Error::data(format!(
                "stream of {} ids is shorter than batch_size x bptt_length = {}",
                ids.len(),
                batch * bptt
            )));
        }
        let lane_len = ids.len() / batch;
        if lane_len < 2 {
            return Err(Error::data("lanes too short to form input/target pairs".to_string()));
        }
        Ok(Lanes { ids, lane_len, batch })
    }

    /// Fill `inputs`/`targets` t-major for a window of `t` steps starting at
    /// in-lane position `p`.
    fn window(&self, p: usize, t: usize, inputs: &mut Vec<u32>, targets: &mut Vec<u32>) {
        inputs.clear();
        targets.clear();
        for step in 0..t {
            for b in 0..self.batch {
                let base = b * self.lane_len + p + step;
                inputs.push(self.ids[base]);
                targets.push(self.ids[base + 1]);
            }
        }
    }
}

/// Statistics of one training run, folded into the checkpoint.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub updates: u64,
    pub final_learning_rate: f64,
    pub final_train_loss: f64,
    pub wall_secs: f64,
}

fn uses_dropout(config: &LMConfig) -> bool {
    config.dropout_hidden > 0.0 || config.dropout_embedding > 0.0 || config.dropout_input > 0.0
}

/// Core loop over encoded ids. `dev_ids` enables the decay schedule.
pub fn train_ids(
    ids: Vec<u32>,
    vocab: VocabKind,
    config: &LMConfig,
    dev_ids: Option<&[u32]>,
    opts: &TrainOptions,
) -> Result<(Checkpoint, TrainReport)> {
    config.validate()?;
    let dims = NetDims::from_config(config, vocab.total_ids());
    let net = RecurrentNet::new(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = net.init_params(&mut rng);

    let start = Instant::now();
    let mut trained_chars: u64 = 0;
    let mut updates: u64 = 0;
    let mut lr = config.learning_rate;
    let mut dev_history: Vec<f64> = Vec::new();
    let mut best_dev = f64::INFINITY;
    let mut next_eval = opts.eval_interval;
    let mut last_loss = f64::NAN;

    if opts.budget_chars > 0 && opts.budget_updates > 0 {
        let lanes = Lanes::new(ids, config.batch_size, config.bptt_length)?;
        let mut state = NetState::zeros(&dims, config.batch_size);
        let mut pos = 0usize;
        let mut inputs = Vec::new();
        let mut targets = Vec::new();

        loop {
            if trained_chars >= opts.budget_chars
                || updates >= opts.budget_updates
                || start.elapsed().as_secs_f64() >= opts.budget_secs
            {
                break;
            }
            let t = config.bptt_length.min(lanes.lane_len - 1 - pos);
            if t == 0 {
                pos = 0;
                state = NetState::zeros(&dims, config.batch_size);
                continue;
            }
            lanes.window(pos, t, &mut inputs, &mut targets);

            let plan = if uses_dropout(config) {
                Some(DropoutPlan::sample(&dims, config, t, config.batch_size, &mut rng)?)
            } else {
                None
            };
            let (loss, cache) =
                net.forward_window(&params, &inputs, &targets, t, &mut state, plan.as_ref())?;
            if !loss.is_finite() {
                return Err(Error::numeric(format!(
                    "non-finite training loss {loss} at update {updates} (lr {lr})"
                )));
            }
            last_loss = loss;
            net.backward_window(&mut params, &inputs, &targets, &cache, plan.as_ref())?;
            sgd_step(&mut params, lr, config.clip)?;

            updates += 1;
            trained_chars += (t * config.batch_size) as u64;
            pos += t;

            if opts.eval_interval > 0 && trained_chars >= next_eval {
                next_eval += opts.eval_interval;
                if let Some(dev) = dev_ids {
                    let cap = if opts.dev_cap == 0 { dev.len() } else { opts.dev_cap.min(dev.len()) };
                    let bpc = evaluate_bpc_ids(&net, &params, &dev[..cap], bootstrap_of(&vocab))?;
                    if bpc >= best_dev {
                        lr *= config.decay;
                    } else {
                        best_dev = bpc;
                    }
                    dev_history.push(bpc);
                    log::info!(
                        "update {updates}: trained {trained_chars} chars, train loss {loss:.4} nats, dev bpc {bpc:.4}, lr {lr:.4}"
                    );
                }
            }
        }
    }

    let ckpt = Checkpoint {
        config: config.clone(),
        vocab,
        params,
        trained_chars,
        dev_bpc_history: dev_history,
        rng_seed: config.seed,
        rng_word_pos: rng.get_word_pos(),
    };
    let report = TrainReport {
        updates,
        final_learning_rate: lr,
        final_train_loss: last_loss,
        wall_secs: start.elapsed().as_secs_f64(),
    };
    Ok((ckpt, report))
}

fn bootstrap_of(vocab: &VocabKind) -> u32 {
    match vocab {
        VocabKind::Char(v) => {
            if v.contains('.') {
                v.id_of('.')
            } else {
                v.unk_id()
            }
        }
        VocabKind::Word(v) => v.unk_id(),
    }
}

/// Train a character-level model on a preprocessed stream.
pub fn train_lm(
    train: &CharStream,
    vocab: &Vocabulary,
    config: &LMConfig,
    dev: Option<&CharStream>,
    opts: &TrainOptions,
) -> Result<(Checkpoint, TrainReport)> {
    if !matches!(config.kind, ModelKind::CharLstm | ModelKind::CharRnn) {
        return Err(Error::config(format!(
            "train_lm expects a character LM kind, got {:?}",
            config.kind
        )));
    }
    let ids = train.encode(vocab);
    let dev_ids = dev.map(|d| d.encode(vocab));
    train_ids(
        ids,
        VocabKind::Char(vocab.clone()),
        config,
        dev_ids.as_deref(),
        opts,
    )
}

/// Train a word-level model: the `vocab_limit` most frequent tokens plus unk.
pub fn train_wordnlm(
    tokens: &[String],
    config: &LMConfig,
    dev: Option<&[String]>,
    opts: &TrainOptions,
) -> Result<(Checkpoint, TrainReport)> {
    if config.kind != ModelKind::WordLstm {
        return Err(Error::config(format!(
            "train_wordnlm expects kind word-lstm, got {:?}",
            config.kind
        )));
    }
    let vocab = build_token_vocab(tokens, config.vocab_limit)?;
    let ids = vocab.encode(tokens);
    let dev_ids = dev.map(|d| vocab.encode(d));
    train_ids(
        ids,
        VocabKind::Word(vocab),
        config,
        dev_ids.as_deref(),
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, preprocess};
    use crate::lm::checkpoint::checkpoint_to_bytes;
    use crate::lm::eval::evaluate_bpc;

    fn small_config(kind: ModelKind) -> LMConfig {
        LMConfig {
            kind,
            layers: 1,
            embedding_size: 8,
            hidden_size: 24,
            batch_size: 4,
            bptt_length: 16,
            learning_rate: 1.0,
            decay: 1.0,
            seed: 42,
            ..LMConfig::default()
        }
    }

    #[test]
    fn zero_budget_returns_initialized_checkpoint() {
        let stream = preprocess(&"the quick brown fox. ".repeat(20), true);
        let vocab = build_vocabulary(&stream, 1).unwrap();
        let opts = TrainOptions {
            budget_chars: 0,
            ..TrainOptions::default()
        };
        let (ckpt, report) =
            train_lm(&stream, &vocab, &small_config(ModelKind::CharLstm), None, &opts).unwrap();
        assert_eq!(ckpt.trained_chars, 0);
        assert_eq!(report.updates, 0);
        assert!(ckpt.dev_bpc_history.is_empty());
    }

    #[test]
    fn stream_shorter_than_batch_times_bptt_is_rejected() {
        let stream = preprocess("tiny.", true);
        let vocab = build_vocabulary(&stream, 1).unwrap();
        let err = train_lm(
            &stream,
            &vocab,
            &small_config(ModelKind::CharLstm),
            None,
            &TrainOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn loss_decreases_on_repetitive_stream() {
        let stream = preprocess(&"abcd".repeat(300), true);
        let vocab = build_vocabulary(&stream, 1).unwrap();
        let opts = TrainOptions {
            budget_updates: 120,
            ..TrainOptions::default()
        };
        let (ckpt, report) =
            train_lm(&stream, &vocab, &small_config(ModelKind::CharLstm), None, &opts).unwrap();
        assert_eq!(report.updates, 120);
        // A period-4 stream should be almost fully predictable by then.
        let bpc = evaluate_bpc(&ckpt, &stream).unwrap();
        assert!(bpc < 0.4, "bpc={bpc}");
    }

    #[test]
    fn rnn_kind_trains_too() {
        let stream = preprocess(&"abab".repeat(200), true);
        let vocab = build_vocabulary(&stream, 1).unwrap();
        let mut config = small_config(ModelKind::CharRnn);
        config.learning_rate = 0.5;
        let opts = TrainOptions {
            budget_updates: 80,
            ..TrainOptions::default()
        };
        let (ckpt, _) = train_lm(&stream, &vocab, &config, None, &opts).unwrap();
        let bpc = evaluate_bpc(&ckpt, &stream).unwrap();
        assert!(bpc < 0.8, "bpc={bpc}");
    }

    #[test]
    fn identical_seeds_give_bit_identical_checkpoints() {
        let stream = preprocess(&"language models learn. ".repeat(40), true);
        let vocab = build_vocabulary(&stream, 1).unwrap();
        let mut config = small_config(ModelKind::CharLstm);
        config.dropout_input = 0.05; // exercise the RNG path too
        let opts = TrainOptions {
            budget_updates: 25,
            ..TrainOptions::default()
        };
        let (a, _) = train_lm(&stream, &vocab, &config, None, &opts).unwrap();
        let (b, _) = train_lm(&stream, &vocab, &config, None, &opts).unwrap();
        assert_eq!(
            checkpoint_to_bytes(&a).unwrap(),
            checkpoint_to_bytes(&b).unwrap()
        );
    }

    #[test]
    fn word_model_trains_and_reports_perplexity() {
        let words: Vec<String> = "the cat sat on the mat the dog sat on the rug"
            .split_whitespace()
            .map(str::to_string)
            .collect();
        let tokens: Vec<String> = std::iter::repeat(words)
            .take(30)
            .flatten()
            .collect();
        let mut config = small_config(ModelKind::WordLstm);
        config.vocab_limit = 100;
        config.bptt_length = 8;
        let opts = TrainOptions {
            budget_updates: 60,
            ..TrainOptions::default()
        };
        let (ckpt, _) = train_wordnlm(&tokens, &config, None, &opts).unwrap();
        let ppl = crate::lm::eval::evaluate_perplexity(&ckpt, &tokens).unwrap();
        assert!(ppl < 8.0, "ppl={ppl}"); // 8 word types, highly regular
    }
}
