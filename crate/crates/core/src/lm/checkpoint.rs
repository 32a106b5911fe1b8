//! Versioned checkpoint files.
//!
//! Layout: magic `CNLM`, format version (u32 LE), header length (u64 LE),
//! a UTF-8 JSON header (config, vocabulary, counters, named-array manifest
//! with shapes), the parameter arrays as little-endian IEEE-754 float64 in
//! manifest order, and a trailing 64-bit FNV-1a checksum of all preceding
//! bytes. Save/load round-trips are bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::hash::Fnv64;
use crate::lm::config::{LMConfig, ModelKind};
use crate::lm::net::{NetDims, RecurrentNet};
use crate::lm::wordvocab::TokenVocab;
use crate::nn::{ParamSet, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CNLM";
pub const CHECKPOINT_VERSION: u32 = 1;

/// The symbol inventory a model was trained over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabKind {
    Char(Vocabulary),
    Word(TokenVocab),
}

impl VocabKind {
    pub fn total_ids(&self) -> usize {
        match self {
            VocabKind::Char(v) => v.total_ids(),
            VocabKind::Word(v) => v.total_ids(),
        }
    }
}

/// A frozen model: everything needed to evaluate, score, trace and resume.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: LMConfig,
    pub vocab: VocabKind,
    pub params: ParamSet,
    pub trained_chars: u64,
    pub dev_bpc_history: Vec<f64>,
    /// Training RNG snapshot: the seed and the ChaCha word position.
    pub rng_seed: u64,
    pub rng_word_pos: u128,
}

impl Checkpoint {
    /// Output dimension of the softmax (total ids; +1 sentinel for the
    /// autoencoder's start/stop symbol).
    pub fn output_dim(&self) -> usize {
        match self.config.kind {
            ModelKind::CharAutoencoder => self.vocab.total_ids() + 1,
            _ => self.vocab.total_ids(),
        }
    }

    /// The stacked net of a (non-autoencoder) language model.
    pub fn net(&self) -> Result<RecurrentNet> {
        if self.config.kind == ModelKind::CharAutoencoder {
            return Err(Error::config(
                "autoencoder checkpoints have encoder/decoder nets, not a single LM net".to_string(),
            ));
        }
        Ok(RecurrentNet::new(NetDims::from_config(
            &self.config,
            self.vocab.total_ids(),
        )))
    }

    pub fn char_vocab(&self) -> Result<&Vocabulary> {
        match &self.vocab {
            VocabKind::Char(v) => Ok(v),
            VocabKind::Word(_) => Err(Error::config(
                "operation requires a character-level checkpoint".to_string(),
            )),
        }
    }

    pub fn word_vocab(&self) -> Result<&TokenVocab> {
        match &self.vocab {
            VocabKind::Word(v) => Ok(v),
            VocabKind::Char(_) => Err(Error::config(
                "operation requires a word-level checkpoint".to_string(),
            )),
        }
    }

    /// Id fed before the first real symbol of an independent sequence: the
    /// full stop for character models when in vocabulary, otherwise unk.
    pub fn bootstrap_id(&self) -> u32 {
        match &self.vocab {
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
}

#[derive(Serialize, Deserialize)]
struct ArrayInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: LMConfig,
    vocab: VocabKind,
    trained_chars: u64,
    dev_bpc_history: Vec<f64>,
    rng_seed: u64,
    rng_word_pos_hi: u64,
    rng_word_pos_lo: u64,
    manifest: Vec<ArrayInfo>,
}

/// Serialize a checkpoint to bytes.
pub fn checkpoint_to_bytes(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let manifest: Vec<ArrayInfo> = ckpt
        .params
        .iter()
        .map(|(name, p)| ArrayInfo {
            name: name.to_string(),
            shape: p.value.shape().to_vec(),
        })
        .collect();
    let header = Header {
        config: ckpt.config.clone(),
        vocab: ckpt.vocab.clone(),
        trained_chars: ckpt.trained_chars,
        dev_bpc_history: ckpt.dev_bpc_history.clone(),
        rng_seed: ckpt.rng_seed,
        rng_word_pos_hi: (ckpt.rng_word_pos >> 64) as u64,
        rng_word_pos_lo: ckpt.rng_word_pos as u64,
        manifest,
    };
    let header_json =
        serde_json::to_vec(&header).map_err(|e| Error::format(format!("header encode: {e}")))?;

    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_json);
    for (_, p) in ckpt.params.iter() {
        for v in p.value.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut h = Fnv64::new();
    h.update(&out);
    out.extend_from_slice(&h.finish().to_le_bytes());
    Ok(out)
}

/// Parse a checkpoint from bytes, verifying magic, version and checksum.
pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 4 + 4 + 8 + 8 {
        return Err(Error::format("checkpoint file too short".to_string()));
    }
    if &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::format("not a checkpoint file (bad magic)".to_string()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(format!(
            "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
        )));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    let mut h = Fnv64::new();
    h.update(body);
    if h.finish() != stored {
        return Err(Error::format("checkpoint checksum mismatch (file corrupted)".to_string()));
    }

    let header_len = u64::from_le_bytes(body[8..16].try_into().unwrap()) as usize;
    if body.len() < 16 + header_len {
        return Err(Error::format("checkpoint header truncated".to_string()));
    }
    let mut header: Header = serde_json::from_slice(&body[16..16 + header_len])
        .map_err(|e| Error::format(format!("header decode: {e}")))?;
    match &mut header.vocab {
        VocabKind::Char(v) => v.reindex(),
        VocabKind::Word(v) => v.reindex(),
    }

    let mut params = ParamSet::new();
    let mut cursor = 16 + header_len;
    for info in &header.manifest {
        let len: usize = info.shape.iter().product();
        let need = len * 8;
        if body.len() < cursor + need {
            return Err(Error::format(format!("array {} truncated", info.name)));
        }
        let data: Vec<f64> = body[cursor..cursor + need]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        cursor += need;
        params.insert(&info.name, Tensor::from_vec(&info.shape, data)?);
    }
    if cursor != body.len() {
        return Err(Error::format("trailing bytes after parameter arrays".to_string()));
    }

    Ok(Checkpoint {
        config: header.config,
        vocab: header.vocab,
        params,
        trained_chars: header.trained_chars,
        dev_bpc_history: header.dev_bpc_history,
        rng_seed: header.rng_seed,
        rng_word_pos: ((header.rng_word_pos_hi as u128) << 64) | header.rng_word_pos_lo as u128,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let bytes = checkpoint_to_bytes(ckpt)?;
    // Write to a temp file in the same directory, then rename: a partial
    // checkpoint is never observable under the final name.
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    checkpoint_from_bytes(&bytes)
}
