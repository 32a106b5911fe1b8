use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Nonlinearity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    CharLstm,
    CharRnn,
    WordLstm,
    CharAutoencoder,
}

impl ModelKind {
    pub fn is_char(&self) -> bool {
        matches!(self, ModelKind::CharLstm | ModelKind::CharRnn | ModelKind::CharAutoencoder)
    }

    pub fn uses_lstm_cell(&self) -> bool {
        !matches!(self, ModelKind::CharRnn)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "char-lstm" => Ok(ModelKind::CharLstm),
            "char-rnn" => Ok(ModelKind::CharRnn),
            "word-lstm" => Ok(ModelKind::WordLstm),
            "autoencoder" | "char-autoencoder" => Ok(ModelKind::CharAutoencoder),
            other => Err(Error::config(format!("unknown model kind: {other}"))),
        }
    }
}

/// Model hyperparameters. The dropout knobs are distinct: `dropout_input`
/// acts element-wise on the embedding fed to the first layer,
/// `dropout_embedding` zeroes whole embedding rows per BPTT window, and
/// `dropout_hidden` acts between recurrent layers (never on the recurrent
/// connections themselves).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LMConfig {
    pub kind: ModelKind,
    pub layers: usize,
    pub embedding_size: usize,
    pub hidden_size: usize,
    pub batch_size: usize,
    pub bptt_length: usize,
    pub learning_rate: f64,
    /// Multiplied into the learning rate whenever a dev evaluation fails to
    /// improve; 1.0 disables decay.
    pub decay: f64,
    pub dropout_hidden: f64,
    pub dropout_embedding: f64,
    pub dropout_input: f64,
    /// Vanilla-RNN nonlinearity; ignored by LSTM kinds.
    pub nonlinearity: Nonlinearity,
    /// Word models keep this many most-frequent tokens (plus unk).
    pub vocab_limit: usize,
    /// Global gradient-norm clip.
    pub clip: f64,
    pub seed: u64,
}

impl Default for LMConfig {
    fn default() -> Self {
        LMConfig {
            kind: ModelKind::CharLstm,
            layers: 2,
            embedding_size: 64,
            hidden_size: 128,
            batch_size: 32,
            bptt_length: 50,
            learning_rate: 2.0,
            decay: 0.95,
            dropout_hidden: 0.0,
            dropout_embedding: 0.0,
            dropout_input: 0.0,
            nonlinearity: Nonlinearity::Tanh,
            vocab_limit: 50_000,
            clip: 5.0,
            seed: 1,
        }
    }
}

impl LMConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("layers", self.layers),
            ("embedding_size", self.embedding_size),
            ("hidden_size", self.hidden_size),
            ("batch_size", self.batch_size),
            ("bptt_length", self.bptt_length),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [
            ("dropout_hidden", self.dropout_hidden),
            ("dropout_embedding", self.dropout_embedding),
            ("dropout_input", self.dropout_input),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::config(format!("{name} = {v} outside [0,1)")));
            }
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::config(format!("decay = {} outside (0,1]", self.decay)));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::config(format!(
                "learning_rate = {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if self.clip <= 0.0 {
            return Err(Error::config(format!("clip = {} must be positive", self.clip)));
        }
        if self.kind == ModelKind::WordLstm && self.vocab_limit == 0 {
            return Err(Error::config("vocab_limit must be at least 1"));
        }
        Ok(())
    }
}

/// Stopping and evaluation schedule for a training run. Budgets are
/// inclusive upper bounds; whichever binds first stops training. For
/// bit-reproducible runs let the character/update budget bind and leave the
/// wall-clock budget as a safety net.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Stop after this many training characters (0 = no updates at all).
    pub budget_chars: u64,
    /// Stop after this many updates (u64::MAX = unlimited).
    pub budget_updates: u64,
    /// Wall-clock cap in seconds (infinity = unlimited).
    pub budget_secs: f64,
    /// Evaluate on dev every this many training characters (0 = never).
    pub eval_interval: u64,
    /// Use at most this many dev characters per evaluation (0 = all).
    pub dev_cap: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            budget_chars: u64::MAX,
            budget_updates: u64::MAX,
            budget_secs: f64::INFINITY,
            eval_interval: 0,
            dev_cap: 50_000,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        LMConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut c = LMConfig::default();
        c.layers = 0;
        assert!(c.validate().is_err());
        let mut c = LMConfig::default();
        c.dropout_input = 1.0;
        assert!(c.validate().is_err());
        let mut c = LMConfig::default();
        c.decay = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn kind_parses() {
        assert_eq!("char-lstm".parse::<ModelKind>().unwrap(), ModelKind::CharLstm);
        assert!("word-rnn".parse::<ModelKind>().is_err());
    }
}
