//! Character-level LSTM sequence-to-sequence autoencoder.
//!
//! The encoder reads a word in isolation; its final hidden/cell state both
//! initializes the decoder and serves as the word representation used as the
//! orthography-only probing baseline. The decoder is teacher-forced during
//! training; reconstruction is measured by greedy decoding. A single
//! sentinel id (one past unk) acts as the decoder start symbol and the
//! end-of-word target.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::corpus::{build_vocabulary, preprocess, Vocabulary};
use crate::error::{Error, Result};
use crate::lm::checkpoint::{Checkpoint, VocabKind};
use crate::lm::config::{LMConfig, ModelKind, TrainOptions};
use crate::lm::train::TrainReport;
use crate::nn::cells::{CellParams, LstmLayer, LstmStepCache};
use crate::nn::linalg::{matmul_nn, matmul_nt, matmul_tn_acc};
use crate::nn::loss::{log_prob, softmax_into};
use crate::nn::params::ParamSet;
use crate::nn::sgd_step;
use crate::nn::tensor::Tensor;

/// Dimension bundle of an autoencoder checkpoint.
#[derive(Debug, Clone, Copy)]
pub struct Autoencoder {
    pub layers: usize,
    pub embedding: usize,
    pub hidden: usize,
    /// Character ids (symbols + unk).
    pub char_ids: usize,
}

impl Autoencoder {
    pub fn from_config(config: &LMConfig, char_ids: usize) -> Self {
        Autoencoder {
            layers: config.layers,
            embedding: config.embedding_size,
            hidden: config.hidden_size,
            char_ids,
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        if ckpt.config.kind != ModelKind::CharAutoencoder {
            return Err(Error::config("checkpoint is not an autoencoder".to_string()));
        }
        Ok(Self::from_config(&ckpt.config, ckpt.vocab.total_ids()))
    }

    /// Decoder start/stop symbol: one id past unk.
    pub fn sentinel(&self) -> u32 {
        self.char_ids as u32
    }

    /// Decoder vocabulary (characters + unk + sentinel).
    pub fn dec_ids(&self) -> usize {
        self.char_ids + 1
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embedding
        } else {
            self.hidden
        }
    }

    pub fn init_params<R: rand::Rng>(&self, rng: &mut R) -> ParamSet {
        let mut params = ParamSet::new();
        params.insert(
            "enc.embed",
            Tensor::uniform_init(&[self.char_ids, self.embedding], self.embedding, rng),
        );
        params.insert(
            "dec.embed",
            Tensor::uniform_init(&[self.dec_ids(), self.embedding], self.embedding, rng),
        );
        for l in 0..self.layers {
            let in_w = self.layer_input(l);
            for side in ["enc", "dec"] {
                params.insert(
                    format!("{side}.rnn{l}.w"),
                    Tensor::uniform_init(&[in_w + self.hidden, 4 * self.hidden], in_w + self.hidden, rng),
                );
                let mut bias = Tensor::zeros(&[4 * self.hidden]);
                for j in self.hidden..2 * self.hidden {
                    bias.as_mut_slice()[j] = 1.0;
                }
                params.insert(format!("{side}.rnn{l}.b"), bias);
            }
        }
        params.insert(
            "dec.out.w",
            Tensor::uniform_init(&[self.hidden, self.dec_ids()], self.hidden, rng),
        );
        params.insert("dec.out.b", Tensor::zeros(&[self.dec_ids()]));
        params
    }
}

struct SideCache {
    /// caches\[t\]\[layer\]
    steps: Vec<Vec<LstmStepCache>>,
    /// Final (h, c) per layer.
    h: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    /// Top-layer h per step (decoder only needs it for the output layer).
    h_top: Vec<Vec<f64>>,
}

/// Run one side (encoder or decoder) forward over `ids` with batch 1.
fn run_side(
    ae: &Autoencoder,
    params: &ParamSet,
    side: &str,
    embed_name: &str,
    ids: &[u32],
    init_h: Vec<Vec<f64>>,
    init_c: Vec<Vec<f64>>,
) -> Result<SideCache> {
    let embed = params.value(embed_name)?;
    let mut h = init_h;
    let mut c = init_c;
    let mut steps = Vec::with_capacity(ids.len());
    let mut h_top = Vec::with_capacity(ids.len());
    for &id in ids {
        let mut layer_in: Vec<f64> = embed.row(id as usize).to_vec();
        let mut per_layer = Vec::with_capacity(ae.layers);
        for l in 0..ae.layers {
            let cell = LstmLayer::new(ae.layer_input(l), ae.hidden);
            let cp = CellParams {
                weight: params.value(&format!("{side}.rnn{l}.w"))?,
                bias: params.value(&format!("{side}.rnn{l}.b"))?,
            };
            let mut h_out = vec![0.0; ae.hidden];
            let cache = cell.forward(&layer_in, &h[l], &c[l], cp, &mut h_out)?;
            c[l].copy_from_slice(&cache.c);
            h[l].copy_from_slice(&h_out);
            per_layer.push(cache);
            layer_in = h_out;
        }
        h_top.push(layer_in);
        steps.push(per_layer);
    }
    Ok(SideCache { steps, h, c, h_top })
}

/// Backward through one side. `dh`/`dc` hold the gradient flowing into the
/// final state; returns the gradient wrt the initial state. `dh_top_extra`
/// supplies an additional per-step gradient on the top-layer output (the
/// decoder's output-layer term); embedding gradients are scattered to
/// `embed_name`.
#[allow(clippy::too_many_arguments)]
fn backward_side(
    ae: &Autoencoder,
    params: &ParamSet,
    grads: &mut ParamSet,
    side: &str,
    embed_name: &str,
    ids: &[u32],
    cache: &SideCache,
    mut dh: Vec<Vec<f64>>,
    mut dc: Vec<Vec<f64>>,
    dh_top_extra: Option<&[Vec<f64>]>,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    for t in (0..ids.len()).rev() {
        if let Some(extra) = dh_top_extra {
            for (acc, v) in dh[ae.layers - 1].iter_mut().zip(&extra[t]) {
                *acc += v;
            }
        }
        let mut dx_lower: Option<Vec<f64>> = None;
        for l in (0..ae.layers).rev() {
            if let Some(dxl) = dx_lower.take() {
                for (acc, v) in dh[l].iter_mut().zip(&dxl) {
                    *acc += v;
                }
            }
            let cell = LstmLayer::new(ae.layer_input(l), ae.hidden);
            let cp = CellParams {
                weight: params.value(&format!("{side}.rnn{l}.w"))?,
                bias: params.value(&format!("{side}.rnn{l}.b"))?,
            };
            let gw = format!("{side}.rnn{l}.w");
            let gb = format!("{side}.rnn{l}.b");
            // Temporarily detach the two gradient tensors to satisfy the
            // borrow checker.
            let mut dw = std::mem::replace(&mut grads.get_mut(&gw)?.grad, Tensor::zeros(&[0]));
            let mut db = std::mem::replace(&mut grads.get_mut(&gb)?.grad, Tensor::zeros(&[0]));
            let (dx, dh_prev, dc_prev) =
                cell.backward(&cache.steps[t][l], &dh[l], &dc[l], cp, &mut dw, &mut db);
            grads.get_mut(&gw)?.grad = dw;
            grads.get_mut(&gb)?.grad = db;
            dh[l] = dh_prev;
            dc[l] = dc_prev;
            dx_lower = Some(dx);
        }
        if let Some(dx0) = dx_lower {
            let ge = grads.get_mut(embed_name)?;
            let row = ge.grad.row_mut(ids[t] as usize);
            for (g, v) in row.iter_mut().zip(&dx0) {
                *g += v;
            }
        }
    }
    Ok((dh, dc))
}

fn zero_state(ae: &Autoencoder) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    (
        (0..ae.layers).map(|_| vec![0.0; ae.hidden]).collect(),
        (0..ae.layers).map(|_| vec![0.0; ae.hidden]).collect(),
    )
}

/// Encode a form: the encoder's final hidden state per layer (h, c).
pub fn encode_form(
    ae: &Autoencoder,
    params: &ParamSet,
    vocab: &Vocabulary,
    form: &str,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let ids = vocab.encode_str(&preprocess(form, true).as_string());
    if ids.is_empty() {
        return Err(Error::data(format!("form {form:?} is empty after preprocessing")));
    }
    let (h0, c0) = zero_state(ae);
    let cache = run_side(ae, params, "enc", "enc.embed", &ids, h0, c0)?;
    Ok((cache.h, cache.c))
}

/// Word representation from the encoder: top-layer h, or all layers
/// concatenated.
pub fn autoencoder_repr(ckpt: &Checkpoint, form: &str, all_layers: bool) -> Result<Vec<f64>> {
    let ae = Autoencoder::from_checkpoint(ckpt)?;
    let vocab = ckpt.char_vocab()?;
    let (h, _) = encode_form(&ae, &ckpt.params, vocab, form)?;
    if all_layers {
        Ok(h.into_iter().flatten().collect())
    } else {
        Ok(h.into_iter().next_back().expect("at least one layer"))
    }
}

/// Teacher-forced loss of one form (mean nats per decoder step), plus
/// gradients accumulated into `grads` when provided. `grads` must be a
/// separate set with the same shapes as `params`.
pub fn form_loss(
    ae: &Autoencoder,
    params: &ParamSet,
    ids: &[u32],
    mut grads: Option<&mut ParamSet>,
) -> Result<f64> {
    let (h0, c0) = zero_state(ae);
    let enc = run_side(ae, params, "enc", "enc.embed", ids, h0, c0)?;

    let mut dec_inputs = vec![ae.sentinel()];
    dec_inputs.extend_from_slice(ids);
    let mut dec_targets = ids.to_vec();
    dec_targets.push(ae.sentinel());

    let dec = run_side(
        ae,
        params,
        "dec",
        "dec.embed",
        &dec_inputs,
        enc.h.clone(),
        enc.c.clone(),
    )?;

    let out_w = params.value("dec.out.w")?;
    let out_b = params.value("dec.out.b")?;
    let v = ae.dec_ids();
    let t_steps = dec_inputs.len();
    let scale = 1.0 / t_steps as f64;

    let mut loss = 0.0;
    let mut dh_top: Vec<Vec<f64>> = Vec::with_capacity(t_steps);
    let mut logits = vec![0.0; v];
    for t in 0..t_steps {
        matmul_nn(&dec.h_top[t], out_w.as_slice(), 1, ae.hidden, v, &mut logits);
        for (lv, bv) in logits.iter_mut().zip(out_b.as_slice()) {
            *lv += bv;
        }
        let target = dec_targets[t] as usize;
        loss -= log_prob(&logits, target)?;
        if let Some(g) = grads.as_deref_mut() {
            let mut dlogits = vec![0.0; v];
            softmax_into(&logits, &mut dlogits);
            dlogits[target] -= 1.0;
            dlogits.iter_mut().for_each(|x| *x *= scale);
            matmul_tn_acc(
                &dec.h_top[t],
                &dlogits,
                1,
                ae.hidden,
                v,
                g.get_mut("dec.out.w")?.grad.as_mut_slice(),
            );
            for (gb, dv) in g.get_mut("dec.out.b")?.grad.as_mut_slice().iter_mut().zip(&dlogits) {
                *gb += dv;
            }
            let mut dh = vec![0.0; ae.hidden];
            matmul_nt(&dlogits, out_w.as_slice(), 1, v, ae.hidden, &mut dh);
            dh_top.push(dh);
        }
    }

    if let Some(g) = grads {
        let (dh0, dc0) = zero_state(ae);
        let (dh_enc, dc_enc) = backward_side(
            ae,
            params,
            g,
            "dec",
            "dec.embed",
            &dec_inputs,
            &dec,
            dh0,
            dc0,
            Some(&dh_top),
        )?;
        // The decoder's initial state is the encoder's final state: splice
        // the gradient across and keep unrolling through the encoder.
        backward_side(ae, params, g, "enc", "enc.embed", ids, &enc, dh_enc, dc_enc, None)?;
    }
    Ok(loss * scale)
}

/// Greedy reconstruction of a form from its encoding.
pub fn reconstruct(ckpt: &Checkpoint, form: &str, max_len: usize) -> Result<String> {
    let ae = Autoencoder::from_checkpoint(ckpt)?;
    let vocab = ckpt.char_vocab()?;
    let (mut h, mut c) = encode_form(&ae, &ckpt.params, vocab, form)?;
    let params = &ckpt.params;
    let out_w = params.value("dec.out.w")?;
    let out_b = params.value("dec.out.b")?;
    let v = ae.dec_ids();

    let mut out = String::new();
    let mut input = ae.sentinel();
    let mut logits = vec![0.0; v];
    for _ in 0..max_len {
        let embed = params.value("dec.embed")?;
        let mut layer_in: Vec<f64> = embed.row(input as usize).to_vec();
        for l in 0..ae.layers {
            let cell = LstmLayer::new(ae.layer_input(l), ae.hidden);
            let cp = CellParams {
                weight: params.value(&format!("dec.rnn{l}.w"))?,
                bias: params.value(&format!("dec.rnn{l}.b"))?,
            };
            let mut h_out = vec![0.0; ae.hidden];
            let cache = cell.forward(&layer_in, &h[l], &c[l], cp, &mut h_out)?;
            c[l].copy_from_slice(&cache.c);
            h[l].copy_from_slice(&h_out);
            layer_in = h_out;
        }
        matmul_nn(&layer_in, out_w.as_slice(), 1, ae.hidden, v, &mut logits);
        for (lv, bv) in logits.iter_mut().zip(out_b.as_slice()) {
            *lv += bv;
        }
        // argmax with ties to the lowest id
        let mut best = 0usize;
        for (i, l) in logits.iter().enumerate() {
            if *l > logits[best] {
                best = i;
            }
        }
        if best as u32 == ae.sentinel() {
            break;
        }
        out.push(vocab.char_of(best as u32).unwrap_or('\u{fffd}'));
        input = best as u32;
    }
    Ok(out)
}

/// Fraction of forms reconstructed exactly by greedy decoding.
pub fn reconstruction_accuracy(ckpt: &Checkpoint, forms: &[String]) -> Result<f64> {
    if forms.is_empty() {
        return Err(Error::data("no forms to reconstruct"));
    }
    let results = crate::par::map_slice(forms, |f| {
        let processed = preprocess(f, true).as_string();
        let maxl = processed.chars().count() + 4;
        reconstruct(ckpt, f, maxl).map(|r| r == processed)
    });
    let mut hits = 0usize;
    for r in results {
        if r? {
            hits += 1;
        }
    }
    Ok(hits as f64 / forms.len() as f64)
}

/// Train an autoencoder on isolated lexicon forms.
pub fn train_autoencoder(
    forms: &[String],
    config: &LMConfig,
    opts: &TrainOptions,
) -> Result<(Checkpoint, TrainReport)> {
    config.validate()?;
    if config.kind != ModelKind::CharAutoencoder {
        return Err(Error::config(format!(
            "train_autoencoder expects kind char-autoencoder, got {:?}",
            config.kind
        )));
    }
    if forms.is_empty() {
        return Err(Error::data("no forms to train on"));
    }
    let joined: String = forms
        .iter()
        .map(|f| preprocess(f, true).as_string())
        .collect::<Vec<_>>()
        .join("");
    let vocab = build_vocabulary(&preprocess(&joined, true), 1)?;
    let ae = Autoencoder::from_config(config, vocab.total_ids());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ae.init_params(&mut rng);

    let encoded: Vec<Vec<u32>> = forms
        .iter()
        .map(|f| vocab.encode_str(&preprocess(f, true).as_string()))
        .filter(|ids| !ids.is_empty())
        .collect();
    if encoded.is_empty() {
        return Err(Error::data("all forms are empty after preprocessing"));
    }

    let start = Instant::now();
    let mut updates = 0u64;
    let mut trained_chars = 0u64;
    let mut last_loss = f64::NAN;
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    // Scratch set: same shapes as `params`, used only for its gradient
    // accumulators so parameter values stay readable during backward.
    let mut scratch = params.clone();

    'outer: loop {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            if trained_chars >= opts.budget_chars
                || updates >= opts.budget_updates
                || start.elapsed().as_secs_f64() >= opts.budget_secs
            {
                break 'outer;
            }
            scratch.zero_grads();
            let mut batch_loss = 0.0;
            for &fi in chunk {
                batch_loss += form_loss(&ae, &params, &encoded[fi], Some(&mut scratch))?;
                trained_chars += encoded[fi].len() as u64 + 1;
            }
            last_loss = batch_loss / chunk.len() as f64;
            if !last_loss.is_finite() {
                return Err(Error::numeric(format!(
                    "non-finite autoencoder loss {last_loss} at update {updates}"
                )));
            }
            let inv = 1.0 / chunk.len() as f64;
            for (name, sp) in scratch.iter() {
                let p = params.get_mut(name)?;
                for (acc, g) in p.grad.as_mut_slice().iter_mut().zip(sp.grad.as_slice()) {
                    *acc += g * inv;
                }
            }
            sgd_step(&mut params, config.learning_rate, config.clip)?;
            updates += 1;
        }
    }

    let ckpt = Checkpoint {
        config: config.clone(),
        vocab: VocabKind::Char(vocab),
        params,
        trained_chars,
        dev_bpc_history: Vec::new(),
        rng_seed: config.seed,
        rng_word_pos: rng.get_word_pos(),
    };
    let report = TrainReport {
        updates,
        final_learning_rate: config.learning_rate,
        final_train_loss: last_loss,
        wall_secs: start.elapsed().as_secs_f64(),
    };
    Ok((ckpt, report))
}

/// Mean teacher-forced loss (nats per decoder step) over a set of forms,
/// without touching gradients.
pub fn autoencoder_loss(ckpt: &Checkpoint, forms: &[String]) -> Result<f64> {
    let ae = Autoencoder::from_checkpoint(ckpt)?;
    let vocab = ckpt.char_vocab()?;
    let mut total = 0.0;
    let mut n = 0usize;
    for f in forms {
        let ids = vocab.encode_str(&preprocess(f, true).as_string());
        if ids.is_empty() {
            continue;
        }
        total += form_loss(&ae, &ckpt.params, &ids, None)?;
        n += 1;
    }
    if n == 0 {
        return Err(Error::data("no non-empty forms to evaluate"));
    }
    Ok(total / n as f64)
}
