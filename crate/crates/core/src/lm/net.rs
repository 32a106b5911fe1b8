//! The stacked recurrent network behind every model kind: embedding, L
//! recurrent layers (LSTM or vanilla RNN), and a softmax output projection.
//!
//! Training works on whole BPTT windows over a lane batch; evaluation walks
//! one id at a time with batch 1. The backward pass consumes the forward
//! cache and accumulates gradients into the [`ParamSet`].

use rand::Rng;

use crate::error::{Error, Result};
use crate::lm::config::LMConfig;
use crate::nn::cells::{CellParams, LstmLayer, LstmStepCache, Nonlinearity, RnnLayer, RnnStepCache};
use crate::nn::dropout::dropout_mask;
use crate::nn::linalg::{matmul_nn, matmul_nt, matmul_tn_acc};
use crate::nn::loss::{log_prob, softmax_into};
use crate::nn::params::ParamSet;
use crate::nn::tensor::Tensor;

/// Architecture of one stacked recurrent net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetDims {
    pub lstm: bool,
    pub layers: usize,
    pub vocab: usize,
    pub embedding: usize,
    pub hidden: usize,
    pub nonlinearity: Nonlinearity,
}

impl NetDims {
    pub fn from_config(config: &LMConfig, vocab: usize) -> Self {
        NetDims {
            lstm: config.kind.uses_lstm_cell(),
            layers: config.layers,
            vocab,
            embedding: config.embedding_size,
            hidden: config.hidden_size,
            nonlinearity: config.nonlinearity,
        }
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.embedding
        } else {
            self.hidden
        }
    }

    fn gate_mult(&self) -> usize {
        if self.lstm {
            4
        } else {
            1
        }
    }
}

/// Per-layer hidden (and, for LSTMs, cell) state for a lane batch.
#[derive(Debug, Clone, PartialEq)]
pub struct NetState {
    pub h: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub batch: usize,
}

impl NetState {
    pub fn zeros(dims: &NetDims, batch: usize) -> Self {
        NetState {
            h: (0..dims.layers).map(|_| vec![0.0; batch * dims.hidden]).collect(),
            c: (0..dims.layers).map(|_| vec![0.0; batch * dims.hidden]).collect(),
        batch,
        }
    }
}

enum LayerCache {
    Lstm(LstmStepCache),
    Rnn(RnnStepCache),
}

struct StepCache {
    layers: Vec<LayerCache>,
}

/// Forward cache of one BPTT window.
pub struct WindowCache {
    steps: Vec<StepCache>,
    /// Top-layer hidden states, t-major: T × batch × H.
    h_top: Vec<f64>,
    t_steps: usize,
    batch: usize,
}

/// Dropout masks for one BPTT window. Regenerated per window from the
/// training RNG; shared by the forward and backward pass.
pub struct DropoutPlan {
    /// Per-vocab-row mask (embedding dropout), length V.
    emb_rows: Vec<f64>,
    /// Element-wise mask on the layer-1 input, length T*B*E.
    input: Vec<f64>,
    /// Element-wise masks between layers, (L-1) × T*B*H.
    hidden: Vec<Vec<f64>>,
}

impl DropoutPlan {
    pub fn sample<R: Rng>(
        dims: &NetDims,
        config: &LMConfig,
        t_steps: usize,
        batch: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let tb = t_steps * batch;
        Ok(DropoutPlan {
            emb_rows: dropout_mask(dims.vocab, config.dropout_embedding, rng)?,
            input: dropout_mask(tb * dims.embedding, config.dropout_input, rng)?,
            hidden: (1..dims.layers)
                .map(|_| dropout_mask(tb * dims.hidden, config.dropout_hidden, rng))
                .collect::<Result<_>>()?,
        })
    }
}

/// Stacked recurrent network. Owns no parameters; a [`ParamSet`] created by
/// [`RecurrentNet::init_params`] (or loaded from a checkpoint) is passed in.
#[derive(Debug, Clone, Copy)]
pub struct RecurrentNet {
    pub dims: NetDims,
}

impl RecurrentNet {
    pub fn new(dims: NetDims) -> Self {
        RecurrentNet { dims }
    }

    /// Parameter names, in the fixed checkpoint order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["embed".to_string(), "out.b".to_string(), "out.w".to_string()];
        for l in 0..self.dims.layers {
            names.push(format!("rnn{l}.b"));
            names.push(format!("rnn{l}.w"));
        }
        names.sort();
        names
    }

    /// Fresh parameters: uniform(-a, a) with a = 1/sqrt(fan_in) for weights,
    /// zero biases except the LSTM forget gate bias, which starts at 1.
    pub fn init_params<R: Rng>(&self, rng: &mut R) -> ParamSet {
        let d = &self.dims;
        let mut params = ParamSet::new();
        params.insert(
            "embed",
            Tensor::uniform_init(&[d.vocab, d.embedding], d.embedding, rng),
        );
        for l in 0..d.layers {
            let in_w = d.layer_input(l);
            let g = d.gate_mult() * d.hidden;
            params.insert(
                format!("rnn{l}.w"),
                Tensor::uniform_init(&[in_w + d.hidden, g], in_w + d.hidden, rng),
            );
            let mut bias = Tensor::zeros(&[g]);
            if d.lstm {
                // forget-gate columns [H, 2H)
                for j in d.hidden..2 * d.hidden {
                    bias.as_mut_slice()[j] = 1.0;
                }
            }
            params.insert(format!("rnn{l}.b"), bias);
        }
        params.insert("out.w", Tensor::uniform_init(&[d.hidden, d.vocab], d.hidden, rng));
        params.insert("out.b", Tensor::zeros(&[d.vocab]));
        params
    }

    fn embed_window(
        &self,
        params: &ParamSet,
        inputs: &[u32],
        t_steps: usize,
        batch: usize,
        dropout: Option<&DropoutPlan>,
    ) -> Result<Vec<f64>> {
        let d = &self.dims;
        let embed = params.value("embed")?;
        let mut x = vec![0.0; t_steps * batch * d.embedding];
        for (pos, &id) in inputs.iter().enumerate() {
            let id = id as usize;
            if id >= d.vocab {
                return Err(Error::data(format!("input id {id} out of range {}", d.vocab)));
            }
            let row = embed.row(id);
            let dst = &mut x[pos * d.embedding..(pos + 1) * d.embedding];
            dst.copy_from_slice(row);
            if let Some(plan) = dropout {
                let scale = plan.emb_rows[id];
                let imask = &plan.input[pos * d.embedding..(pos + 1) * d.embedding];
                for (v, m) in dst.iter_mut().zip(imask) {
                    *v *= scale * m;
                }
            }
        }
        Ok(x)
    }

    /// Forward over a window. `inputs` and `targets` are t-major (the id of
    /// lane b at step t sits at `t*batch + b`). Returns the mean loss in
    /// nats per position and the cache for [`RecurrentNet::backward_window`].
    /// The state is advanced in place (and detached: backward never crosses
    /// the window start).
    pub fn forward_window(
        &self,
        params: &ParamSet,
        inputs: &[u32],
        targets: &[u32],
        t_steps: usize,
        state: &mut NetState,
        dropout: Option<&DropoutPlan>,
    ) -> Result<(f64, WindowCache)> {
        let d = &self.dims;
        let batch = state.batch;
        if inputs.len() != t_steps * batch || targets.len() != t_steps * batch {
            return Err(Error::shape("window ids do not match t_steps x batch"));
        }

        let x = self.embed_window(params, inputs, t_steps, batch, dropout)?;
        let mut steps = Vec::with_capacity(t_steps);
        let mut h_top = vec![0.0; t_steps * batch * d.hidden];

        for t in 0..t_steps {
            let mut layer_in: Vec<f64> =
                x[t * batch * d.embedding..(t + 1) * batch * d.embedding].to_vec();
            let mut layers = Vec::with_capacity(d.layers);
            for l in 0..d.layers {
                if l > 0 {
                    if let Some(plan) = dropout {
                        let mask = &plan.hidden[l - 1]
                            [t * batch * d.hidden..(t + 1) * batch * d.hidden];
                        for (v, m) in layer_in.iter_mut().zip(mask) {
                            *v *= m;
                        }
                    }
                }
                let w = params.value(&format!("rnn{l}.w"))?;
                let b = params.value(&format!("rnn{l}.b"))?;
                let cp = CellParams { weight: w, bias: b };
                let mut h_out = vec![0.0; batch * d.hidden];
                if d.lstm {
                    let cell = LstmLayer::new(d.layer_input(l), d.hidden);
                    let cache = cell.forward(&layer_in, &state.h[l], &state.c[l], cp, &mut h_out)?;
                    state.c[l].copy_from_slice(&cache.c);
                    layers.push(LayerCache::Lstm(cache));
                } else {
                    let cell = RnnLayer::new(d.layer_input(l), d.hidden, d.nonlinearity);
                    let cache = cell.forward(&layer_in, &state.h[l], cp, &mut h_out)?;
                    layers.push(LayerCache::Rnn(cache));
                }
                state.h[l].copy_from_slice(&h_out);
                layer_in = h_out;
            }
            h_top[t * batch * d.hidden..(t + 1) * batch * d.hidden].copy_from_slice(&layer_in);
            steps.push(StepCache { layers });
        }

        // Loss over the whole window.
        let out_w = params.value("out.w")?;
        let out_b = params.value("out.b")?;
        let mut loss_sum = 0.0;
        let mut logits = vec![0.0; batch * d.vocab];
        for t in 0..t_steps {
            matmul_nn(
                &h_top[t * batch * d.hidden..(t + 1) * batch * d.hidden],
                out_w.as_slice(),
                batch,
                d.hidden,
                d.vocab,
                &mut logits,
            );
            for b in 0..batch {
                let row = &mut logits[b * d.vocab..(b + 1) * d.vocab];
                for (v, bv) in row.iter_mut().zip(out_b.as_slice()) {
                    *v += bv;
                }
                let target = targets[t * batch + b] as usize;
                loss_sum -= log_prob(row, target)?;
            }
        }

        let mean = loss_sum / (t_steps * batch) as f64;
        Ok((
            mean,
            WindowCache {
                steps,
                h_top,
                t_steps,
                batch,
            },
        ))
    }

    /// Backward over a cached window, accumulating parameter gradients for
    /// the mean-per-position loss.
    pub fn backward_window(
        &self,
        params: &mut ParamSet,
        inputs: &[u32],
        targets: &[u32],
        cache: &WindowCache,
        dropout: Option<&DropoutPlan>,
    ) -> Result<()> {
        let d = self.dims;
        let batch = cache.batch;
        let t_steps = cache.t_steps;
        let scale = 1.0 / (t_steps * batch) as f64;

        // Gradients go into a scratch buffer (sorted like the ParamSet) so
        // the parameter values stay immutably borrowable throughout.
        let mut grads: Vec<(String, Tensor)> = params
            .iter()
            .map(|(name, p)| (name.to_string(), Tensor::zeros(p.value.shape())))
            .collect();
        let gidx = |grads: &[(String, Tensor)], name: &str| -> usize {
            grads
                .binary_search_by(|(n, _)| n.as_str().cmp(name))
                .expect("gradient buffer mirrors the param set")
        };

        {
            let p: &ParamSet = params;
            let out_w = p.value("out.w")?;
            let out_b = p.value("out.b")?;

            let mut dh: Vec<Vec<f64>> =
                (0..d.layers).map(|_| vec![0.0; batch * d.hidden]).collect();
            let mut dc: Vec<Vec<f64>> =
                (0..d.layers).map(|_| vec![0.0; batch * d.hidden]).collect();

            let mut logits = vec![0.0; batch * d.vocab];
            let mut dx_embed = vec![0.0; t_steps * batch * d.embedding];

            for t in (0..t_steps).rev() {
                let h_t = &cache.h_top[t * batch * d.hidden..(t + 1) * batch * d.hidden];
                // Recompute logits, then dlogits = (softmax - onehot) * scale.
                matmul_nn(h_t, out_w.as_slice(), batch, d.hidden, d.vocab, &mut logits);
                let mut dlogits = vec![0.0; batch * d.vocab];
                for b in 0..batch {
                    let row = &mut logits[b * d.vocab..(b + 1) * d.vocab];
                    for (v, bv) in row.iter_mut().zip(out_b.as_slice()) {
                        *v += bv;
                    }
                    let drow = &mut dlogits[b * d.vocab..(b + 1) * d.vocab];
                    softmax_into(row, drow);
                    drow[targets[t * batch + b] as usize] -= 1.0;
                    drow.iter_mut().for_each(|v| *v *= scale);
                }

                let ow_i = gidx(&grads, "out.w");
                matmul_tn_acc(h_t, &dlogits, batch, d.hidden, d.vocab, grads[ow_i].1.as_mut_slice());
                let ob_i = gidx(&grads, "out.b");
                let gbs = grads[ob_i].1.as_mut_slice();
                for b in 0..batch {
                    for (j, g) in gbs.iter_mut().enumerate() {
                        *g += dlogits[b * d.vocab + j];
                    }
                }

                // dh over the top layer: output layer plus future steps.
                let mut dh_from_out = vec![0.0; batch * d.hidden];
                matmul_nt(&dlogits, out_w.as_slice(), batch, d.vocab, d.hidden, &mut dh_from_out);
                for (acc, v) in dh[d.layers - 1].iter_mut().zip(&dh_from_out) {
                    *acc += v;
                }

                // Walk layers top to bottom.
                let mut dx_lower: Option<Vec<f64>> = None;
                for l in (0..d.layers).rev() {
                    if let Some(dxl) = dx_lower.take() {
                        // Gradient from layer l+1 into h of layer l flows
                        // through the inter-layer dropout mask.
                        if let Some(plan) = dropout {
                            let mask =
                                &plan.hidden[l][t * batch * d.hidden..(t + 1) * batch * d.hidden];
                            for ((acc, v), m) in dh[l].iter_mut().zip(&dxl).zip(mask) {
                                *acc += v * m;
                            }
                        } else {
                            for (acc, v) in dh[l].iter_mut().zip(&dxl) {
                                *acc += v;
                            }
                        }
                    }
                    let cp = CellParams {
                        weight: p.value(&format!("rnn{l}.w"))?,
                        bias: p.value(&format!("rnn{l}.b"))?,
                    };
                    // rnn{l}.b sorts directly before rnn{l}.w.
                    let dw_i = gidx(&grads, &format!("rnn{l}.w"));
                    let (left, right) = grads.split_at_mut(dw_i);
                    let db = &mut left[dw_i - 1].1;
                    let dw = &mut right[0].1;
                    debug_assert_eq!(left[dw_i - 1].0, format!("rnn{l}.b"));

                    let (dx, dh_prev, dc_prev) = match &cache.steps[t].layers[l] {
                        LayerCache::Lstm(c) => {
                            let cell = LstmLayer::new(d.layer_input(l), d.hidden);
                            cell.backward(c, &dh[l], &dc[l], cp, dw, db)
                        }
                        LayerCache::Rnn(c) => {
                            let cell = RnnLayer::new(d.layer_input(l), d.hidden, d.nonlinearity);
                            let (dx, dh_prev) = cell.backward(c, &dh[l], cp, dw, db);
                            (dx, dh_prev, vec![0.0; batch * d.hidden])
                        }
                    };
                    dh[l] = dh_prev;
                    dc[l] = dc_prev;
                    dx_lower = Some(dx);
                }
                if let Some(dx0) = dx_lower {
                    dx_embed[t * batch * d.embedding..(t + 1) * batch * d.embedding]
                        .copy_from_slice(&dx0);
                }
            }

            // Scatter embedding gradients, applying the same masks as forward.
            let emb_i = gidx(&grads, "embed");
            let ge = grads[emb_i].1.as_mut_slice();
            let e = d.embedding;
            for (pos, &id) in inputs.iter().enumerate() {
                let id = id as usize;
                let src = &dx_embed[pos * e..(pos + 1) * e];
                let dst = &mut ge[id * e..(id + 1) * e];
                if let Some(plan) = dropout {
                    let scale_row = plan.emb_rows[id];
                    let imask = &plan.input[pos * e..(pos + 1) * e];
                    for ((g, v), m) in dst.iter_mut().zip(src).zip(imask) {
                        *g += v * scale_row * m;
                    }
                } else {
                    for (g, v) in dst.iter_mut().zip(src) {
                        *g += v;
                    }
                }
            }
        }

        // Fold the scratch gradients into the ParamSet accumulators.
        for (name, g) in grads {
            let p = params.get_mut(&name)?;
            for (acc, v) in p.grad.as_mut_slice().iter_mut().zip(g.as_slice()) {
                *acc += v;
            }
        }
        Ok(())
    }

    /// Minimum |pre-activation| over all vanilla-RNN units in a cached
    /// window (infinity for LSTM stacks). Finite differences across the
    /// relu kink are invalid; gradient checks use this margin to pick
    /// instances where no unit sits near zero.
    pub fn relu_margin(&self, params: &ParamSet, cache: &WindowCache) -> Result<f64> {
        if self.dims.lstm {
            return Ok(f64::INFINITY);
        }
        let d = self.dims;
        let mut margin = f64::INFINITY;
        for step in &cache.steps {
            for (l, layer) in step.layers.iter().enumerate() {
                let LayerCache::Rnn(c) = layer else { continue };
                let w = params.value(&format!("rnn{l}.w"))?;
                let b = params.value(&format!("rnn{l}.b"))?;
                let in_w = d.layer_input(l) + d.hidden;
                let batch = c.xh.len() / in_w;
                let mut z = vec![0.0; batch * d.hidden];
                matmul_nn(&c.xh, w.as_slice(), batch, in_w, d.hidden, &mut z);
                for bi in 0..batch {
                    for (j, bv) in b.as_slice().iter().enumerate() {
                        let v = z[bi * d.hidden + j] + bv;
                        margin = margin.min(v.abs());
                    }
                }
            }
        }
        Ok(margin)
    }

    /// One evaluation step with batch 1: feed `input`, write the logits for
    /// the next id into `logits_out`, and advance the state.
    pub fn eval_step(
        &self,
        params: &ParamSet,
        state: &mut NetState,
        input: u32,
        logits_out: &mut [f64],
    ) -> Result<()> {
        let d = &self.dims;
        debug_assert_eq!(state.batch, 1);
        let embed = params.value("embed")?;
        let id = input as usize;
        if id >= d.vocab {
            return Err(Error::data(format!("input id {id} out of range {}", d.vocab)));
        }
        let mut layer_in: Vec<f64> = embed.row(id).to_vec();
        for l in 0..d.layers {
            let w = params.value(&format!("rnn{l}.w"))?;
            let b = params.value(&format!("rnn{l}.b"))?;
            let cp = CellParams { weight: w, bias: b };
            let mut h_out = vec![0.0; d.hidden];
            if d.lstm {
                let cell = LstmLayer::new(d.layer_input(l), d.hidden);
                let cache = cell.forward(&layer_in, &state.h[l], &state.c[l], cp, &mut h_out)?;
                state.c[l].copy_from_slice(&cache.c);
            } else {
                let cell = RnnLayer::new(d.layer_input(l), d.hidden, d.nonlinearity);
                cell.forward(&layer_in, &state.h[l], cp, &mut h_out)?;
            }
            state.h[l].copy_from_slice(&h_out);
            layer_in = h_out;
        }
        let out_w = params.value("out.w")?;
        let out_b = params.value("out.b")?;
        matmul_nn(&layer_in, out_w.as_slice(), 1, d.hidden, d.vocab, logits_out);
        for (v, bv) in logits_out.iter_mut().zip(out_b.as_slice()) {
            *v += bv;
        }
        Ok(())
    }
}
