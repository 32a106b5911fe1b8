//! Language models over unsegmented character streams (and their word-level
//! and autoencoder relatives): truncated-BPTT training, evaluation, scoring,
//! tracing, and versioned checkpoints.

pub mod autoencoder;
pub mod checkpoint;
pub mod config;
pub mod eval;
pub mod net;
pub mod score;
pub mod train;
pub mod verify;
pub mod wordvocab;

pub use autoencoder::{
    autoencoder_loss, autoencoder_repr, reconstruct, reconstruction_accuracy, train_autoencoder,
    Autoencoder,
};
pub use checkpoint::{
    checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint, Checkpoint,
    VocabKind,
};
pub use config::{LMConfig, ModelKind, TrainOptions};
pub use eval::{evaluate_bpc, evaluate_bpc_ids, evaluate_perplexity, stream_nll_nats};
pub use net::{DropoutPlan, NetDims, NetState, RecurrentNet};
pub use score::{score, score_ids, score_tokens, trace, word_repr, ScoreValue, SequenceScorer, TraceRecord};
pub use train::{train_ids, train_lm, train_wordnlm, TrainReport};
pub use verify::{gradient_battery, BatteryCase, BatteryReport};
pub use wordvocab::{build_token_vocab, TokenVocab};

/// Test-only fixtures shared by the unit tests of several submodules.
#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::corpus::{build_vocabulary, preprocess};
    use rand::SeedableRng;

    /// Small random (untrained) character checkpoint over `corpus`.
    pub fn tiny_checkpoint(corpus: &str, seed: u64) -> Checkpoint {
        let vocab = build_vocabulary(&preprocess(corpus, true), 1).unwrap();
        let config = LMConfig {
            layers: 2,
            embedding_size: 4,
            hidden_size: 6,
            ..LMConfig::default()
        };
        let net = RecurrentNet::new(NetDims::from_config(&config, vocab.total_ids()));
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let params = net.init_params(&mut rng);
        Checkpoint {
            config,
            vocab: VocabKind::Char(vocab),
            params,
            trained_chars: 0,
            dev_bpc_history: Vec::new(),
            rng_seed: seed,
            rng_word_pos: 0,
        }
    }
}
