//! Recurrent cells: batched LSTM and vanilla RNN layers with hand-written
//! backward passes, plus single-vector step functions.
//!
//! Layout conventions: a layer with input width D and hidden width H owns a
//! weight matrix of shape (D+H) × G and a bias of length G, applied to the
//! concatenation [x; h]. For the LSTM, G = 4H with gate columns packed in the
//! order input, forget, candidate, output; for the RNN, G = H.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::linalg::{matmul_nn, matmul_nt, matmul_tn_acc};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Tanh,
    Relu,
}

impl std::str::FromStr for Nonlinearity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Nonlinearity::Tanh),
            "relu" => Ok(Nonlinearity::Relu),
            other => Err(Error::config(format!("unknown nonlinearity: {other}"))),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Parameters of one recurrent layer.
#[derive(Debug, Clone, Copy)]
pub struct CellParams<'a> {
    pub weight: &'a Tensor,
    pub bias: &'a Tensor,
}

impl<'a> CellParams<'a> {
    fn check(&self, in_width: usize, hidden: usize, gate_mult: usize) -> Result<()> {
        let g = gate_mult * hidden;
        if self.weight.rows() != in_width + hidden || self.weight.cols() != g {
            return Err(Error::shape(format!(
                "cell weight is {}x{}, expected {}x{}",
                self.weight.rows(),
                self.weight.cols(),
                in_width + hidden,
                g
            )));
        }
        if self.bias.len() != g {
            return Err(Error::shape(format!(
                "cell bias has length {}, expected {}",
                self.bias.len(),
                g
            )));
        }
        Ok(())
    }
}

/// Forward cache for one LSTM step over a batch.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    /// Concatenated [x; h_prev], batch × (D+H).
    pub xh: Vec<f64>,
    /// Previous cell state, batch × H.
    pub c_prev: Vec<f64>,
    /// Post-activation gates [i f g o], batch × 4H.
    pub gates: Vec<f64>,
    /// New cell state, batch × H.
    pub c: Vec<f64>,
    /// tanh of the new cell state, batch × H.
    pub tanh_c: Vec<f64>,
}

/// Batched LSTM layer (stateless; parameters are passed per call).
#[derive(Debug, Clone, Copy)]
pub struct LstmLayer {
    pub in_width: usize,
    pub hidden: usize,
}

impl LstmLayer {
    pub fn new(in_width: usize, hidden: usize) -> Self {
        LstmLayer { in_width, hidden }
    }

    /// One step over a batch. `x` is batch×D, `h_prev`/`c_prev` are batch×H.
    /// Writes the new hidden state into `h_out` and returns the cache needed
    /// by [`LstmLayer::backward`] (which also holds the new cell state).
    pub fn forward(
        &self,
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
        params: CellParams,
        h_out: &mut [f64],
    ) -> Result<LstmStepCache> {
        let (d, h) = (self.in_width, self.hidden);
        params.check(d, h, 4)?;
        let batch = x.len() / d.max(1);
        if x.len() != batch * d || h_prev.len() != batch * h || c_prev.len() != batch * h {
            return Err(Error::shape("lstm step: inconsistent batch dimensions"));
        }

        let mut xh = vec![0.0; batch * (d + h)];
        for b in 0..batch {
            xh[b * (d + h)..b * (d + h) + d].copy_from_slice(&x[b * d..(b + 1) * d]);
            xh[b * (d + h) + d..(b + 1) * (d + h)].copy_from_slice(&h_prev[b * h..(b + 1) * h]);
        }

        let g4 = 4 * h;
        let mut gates = vec![0.0; batch * g4];
        matmul_nn(&xh, params.weight.as_slice(), batch, d + h, g4, &mut gates);

        let bias = params.bias.as_slice();
        let mut c = vec![0.0; batch * h];
        let mut tanh_c = vec![0.0; batch * h];
        for b in 0..batch {
            let row = &mut gates[b * g4..(b + 1) * g4];
            for (v, bv) in row.iter_mut().zip(bias) {
                *v += bv;
            }
            for j in 0..h {
                row[j] = sigmoid(row[j]);
                row[h + j] = sigmoid(row[h + j]);
                row[2 * h + j] = row[2 * h + j].tanh();
                row[3 * h + j] = sigmoid(row[3 * h + j]);
            }
            for j in 0..h {
                let (i_g, f_g, g_g, o_g) = (row[j], row[h + j], row[2 * h + j], row[3 * h + j]);
                let cv = f_g * c_prev[b * h + j] + i_g * g_g;
                let tc = cv.tanh();
                c[b * h + j] = cv;
                tanh_c[b * h + j] = tc;
                h_out[b * h + j] = o_g * tc;
            }
        }

        Ok(LstmStepCache {
            xh,
            c_prev: c_prev.to_vec(),
            gates,
            c,
            tanh_c,
        })
    }

    /// Backward through one step. `dh` is the gradient wrt the emitted hidden
    /// state, `dc` wrt the emitted cell state (from the next step). Gradients
    /// for the weights are accumulated into `dw`/`db`; returns
    /// (dx, dh_prev, dc_prev).
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        cache: &LstmStepCache,
        dh: &[f64],
        dc: &[f64],
        params: CellParams,
        dw: &mut Tensor,
        db: &mut Tensor,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (d, h) = (self.in_width, self.hidden);
        let g4 = 4 * h;
        let batch = dh.len() / h;

        let mut dz = vec![0.0; batch * g4];
        let mut dc_prev = vec![0.0; batch * h];
        for b in 0..batch {
            let gates = &cache.gates[b * g4..(b + 1) * g4];
            let dzrow = &mut dz[b * g4..(b + 1) * g4];
            for j in 0..h {
                let (i_g, f_g, g_g, o_g) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                let tc = cache.tanh_c[b * h + j];
                let dh_v = dh[b * h + j];
                let dc_total = dc[b * h + j] + dh_v * o_g * (1.0 - tc * tc);
                dzrow[3 * h + j] = dh_v * tc * o_g * (1.0 - o_g);
                dzrow[j] = dc_total * g_g * i_g * (1.0 - i_g);
                dzrow[2 * h + j] = dc_total * i_g * (1.0 - g_g * g_g);
                dzrow[h + j] = dc_total * cache.c_prev[b * h + j] * f_g * (1.0 - f_g);
                dc_prev[b * h + j] = dc_total * f_g;
            }
        }

        matmul_tn_acc(&cache.xh, &dz, batch, d + h, g4, dw.as_mut_slice());
        {
            let db = db.as_mut_slice();
            for b in 0..batch {
                for (j, dbv) in db.iter_mut().enumerate() {
                    *dbv += dz[b * g4 + j];
                }
            }
        }

        let mut dxh = vec![0.0; batch * (d + h)];
        matmul_nt(&dz, params.weight.as_slice(), batch, g4, d + h, &mut dxh);
        let mut dx = vec![0.0; batch * d];
        let mut dh_prev = vec![0.0; batch * h];
        for b in 0..batch {
            dx[b * d..(b + 1) * d].copy_from_slice(&dxh[b * (d + h)..b * (d + h) + d]);
            dh_prev[b * h..(b + 1) * h]
                .copy_from_slice(&dxh[b * (d + h) + d..(b + 1) * (d + h)]);
        }
        (dx, dh_prev, dc_prev)
    }
}

/// Forward cache for one vanilla RNN step over a batch.
#[derive(Debug, Clone)]
pub struct RnnStepCache {
    pub xh: Vec<f64>,
    /// Post-activation hidden state, batch × H.
    pub h: Vec<f64>,
}

/// Batched vanilla RNN layer: h' = φ(W·[x;h] + b).
#[derive(Debug, Clone, Copy)]
pub struct RnnLayer {
    pub in_width: usize,
    pub hidden: usize,
    pub nonlinearity: Nonlinearity,
}

impl RnnLayer {
    pub fn new(in_width: usize, hidden: usize, nonlinearity: Nonlinearity) -> Self {
        RnnLayer {
            in_width,
            hidden,
            nonlinearity,
        }
    }

    pub fn forward(
        &self,
        x: &[f64],
        h_prev: &[f64],
        params: CellParams,
        h_out: &mut [f64],
    ) -> Result<RnnStepCache> {
        let (d, h) = (self.in_width, self.hidden);
        params.check(d, h, 1)?;
        let batch = x.len() / d.max(1);
        if x.len() != batch * d || h_prev.len() != batch * h {
            return Err(Error::shape("rnn step: inconsistent batch dimensions"));
        }

        let mut xh = vec![0.0; batch * (d + h)];
        for b in 0..batch {
            xh[b * (d + h)..b * (d + h) + d].copy_from_slice(&x[b * d..(b + 1) * d]);
            xh[b * (d + h) + d..(b + 1) * (d + h)].copy_from_slice(&h_prev[b * h..(b + 1) * h]);
        }
        matmul_nn(&xh, params.weight.as_slice(), batch, d + h, h, h_out);
        let bias = params.bias.as_slice();
        for b in 0..batch {
            let row = &mut h_out[b * h..(b + 1) * h];
            for (v, bv) in row.iter_mut().zip(bias) {
                *v += bv;
            }
            match self.nonlinearity {
                Nonlinearity::Tanh => row.iter_mut().for_each(|v| *v = v.tanh()),
                Nonlinearity::Relu => row.iter_mut().for_each(|v| *v = v.max(0.0)),
            }
        }
        Ok(RnnStepCache {
            xh,
            h: h_out.to_vec(),
        })
    }

    pub fn backward(
        &self,
        cache: &RnnStepCache,
        dh: &[f64],
        params: CellParams,
        dw: &mut Tensor,
        db: &mut Tensor,
    ) -> (Vec<f64>, Vec<f64>) {
        let (d, h) = (self.in_width, self.hidden);
        let batch = dh.len() / h;

        let mut dz = vec![0.0; batch * h];
        for (idx, dzv) in dz.iter_mut().enumerate() {
            let hv = cache.h[idx];
            *dzv = match self.nonlinearity {
                Nonlinearity::Tanh => dh[idx] * (1.0 - hv * hv),
                Nonlinearity::Relu => {
                    if hv > 0.0 {
                        dh[idx]
                    } else {
                        0.0
                    }
                }
            };
        }

        matmul_tn_acc(&cache.xh, &dz, batch, d + h, h, dw.as_mut_slice());
        {
            let db = db.as_mut_slice();
            for b in 0..batch {
                for (j, dbv) in db.iter_mut().enumerate() {
                    *dbv += dz[b * h + j];
                }
            }
        }

        let mut dxh = vec![0.0; batch * (d + h)];
        matmul_nt(&dz, params.weight.as_slice(), batch, h, d + h, &mut dxh);
        let mut dx = vec![0.0; batch * d];
        let mut dh_prev = vec![0.0; batch * h];
        for b in 0..batch {
            dx[b * d..(b + 1) * d].copy_from_slice(&dxh[b * (d + h)..b * (d + h) + d]);
            dh_prev[b * h..(b + 1) * h]
                .copy_from_slice(&dxh[b * (d + h) + d..(b + 1) * (d + h)]);
        }
        (dx, dh_prev)
    }
}

/// Single-vector LSTM step: returns (h', c').
pub fn lstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    params: CellParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let hidden = h_prev.len();
    let layer = LstmLayer::new(x.len(), hidden);
    let mut h_out = vec![0.0; hidden];
    let cache = layer.forward(x, h_prev, c_prev, params, &mut h_out)?;
    Ok((h_out, cache.c))
}

/// Single-vector vanilla RNN step: returns h'.
pub fn rnn_step(
    x: &[f64],
    h_prev: &[f64],
    params: CellParams,
    nonlinearity: Nonlinearity,
) -> Result<Vec<f64>> {
    let hidden = h_prev.len();
    let layer = RnnLayer::new(x.len(), hidden, nonlinearity);
    let mut h_out = vec![0.0; hidden];
    layer.forward(x, h_prev, params, &mut h_out)?;
    Ok(h_out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn params_for(d: usize, h: usize, mult: usize) -> (Tensor, Tensor) {
        (
            Tensor::zeros(&[d + h, mult * h]),
            Tensor::zeros(&[mult * h]),
        )
    }

    #[test]
    fn lstm_zero_params_give_zero_state() {
        let (w, b) = params_for(3, 4, 4);
        let p = CellParams { weight: &w, bias: &b };
        let (h, c) = lstm_step(&[0.7, -0.3, 0.1], &[0.0; 4], &[0.0; 4], p).unwrap();
        // gates are sigmoid(0)=0.5, candidate tanh(0)=0, so c'=0 and h'=0.
        assert!(h.iter().all(|v| *v == 0.0));
        assert!(c.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lstm_saturated_forget_gate_copies_cell() {
        let d = 2;
        let h = 3;
        let (w, mut b) = params_for(d, h, 4);
        // Saturate: input gate closed, forget gate open.
        for j in 0..h {
            b.as_mut_slice()[j] = -50.0; // input gate -> 0
            b.as_mut_slice()[h + j] = 50.0; // forget gate -> 1
        }
        let p = CellParams { weight: &w, bias: &b };
        let c_prev = [0.3, -1.2, 0.8];
        let (_, c) = lstm_step(&[0.5, 0.5], &[0.1, 0.2, 0.3], &c_prev, p).unwrap();
        for (cv, cp) in c.iter().zip(&c_prev) {
            assert!((cv - cp).abs() < 1e-12, "c'={cv} vs c={cp}");
        }
    }

    /// Independent scalar re-computation of one LSTM step, written index by
    /// index with no shared code with the batched kernel.
    fn lstm_scalar_oracle(
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
        w: &Tensor,
        bias: &Tensor,
    ) -> (Vec<f64>, Vec<f64>) {
        let d = x.len();
        let h = h_prev.len();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h_new = vec![0.0; h];
        let mut c_new = vec![0.0; h];
        for j in 0..h {
            let mut pre = [0.0f64; 4];
            for (gi, p) in pre.iter_mut().enumerate() {
                let col = gi * h + j;
                let mut acc = bias.as_slice()[col];
                for (r, xv) in x.iter().enumerate() {
                    acc += xv * w.as_slice()[r * 4 * h + col];
                }
                for (r, hv) in h_prev.iter().enumerate() {
                    acc += hv * w.as_slice()[(d + r) * 4 * h + col];
                }
                *p = acc;
            }
            let (i_g, f_g, g_g, o_g) = (sig(pre[0]), sig(pre[1]), pre[2].tanh(), sig(pre[3]));
            c_new[j] = f_g * c_prev[j] + i_g * g_g;
            h_new[j] = o_g * c_new[j].tanh();
        }
        (h_new, c_new)
    }

    #[test]
    fn lstm_matches_scalar_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (d, h) = (3, 5);
        let w = Tensor::uniform_init(&[d + h, 4 * h], d + h, &mut rng);
        let b = Tensor::uniform_init(&[4 * h], d + h, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hp: Vec<f64> = (0..h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cp: Vec<f64> = (0..h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = CellParams { weight: &w, bias: &b };
        let (got_h, got_c) = lstm_step(&x, &hp, &cp, p).unwrap();
        let (want_h, want_c) = lstm_scalar_oracle(&x, &hp, &cp, &w, &b);
        for (a, o) in got_h.iter().zip(&want_h) {
            assert!((a - o).abs() < 1e-14);
        }
        for (a, o) in got_c.iter().zip(&want_c) {
            assert!((a - o).abs() < 1e-14);
        }
    }

    #[test]
    fn rnn_zero_params_and_relu_clamp() {
        let (w, b) = params_for(2, 3, 1);
        let p = CellParams { weight: &w, bias: &b };
        for nl in [Nonlinearity::Tanh, Nonlinearity::Relu] {
            let h = rnn_step(&[1.0, -1.0], &[0.5, 0.5, 0.5], p, nl).unwrap();
            assert!(h.iter().all(|v| *v == 0.0));
        }
        // Pre-activation -1 clamps to 0 under relu.
        let mut b2 = Tensor::zeros(&[3]);
        b2.as_mut_slice().copy_from_slice(&[-1.0, -1.0, 2.0]);
        let p2 = CellParams { weight: &w, bias: &b2 };
        let h = rnn_step(&[0.0, 0.0], &[0.0; 3], p2, Nonlinearity::Relu).unwrap();
        assert_eq!(h, vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn rnn_matches_scalar_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let (d, h) = (4, 3);
        let w = Tensor::uniform_init(&[d + h, h], d + h, &mut rng);
        let b = Tensor::uniform_init(&[h], d + h, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let hp: Vec<f64> = (0..h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = CellParams { weight: &w, bias: &b };
        let got = rnn_step(&x, &hp, p, Nonlinearity::Tanh).unwrap();
        for j in 0..h {
            let mut acc = b.as_slice()[j];
            for (r, xv) in x.iter().enumerate() {
                acc += xv * w.as_slice()[r * h + j];
            }
            for (r, hv) in hp.iter().enumerate() {
                acc += hv * w.as_slice()[(d + r) * h + j];
            }
            assert!((got[j] - acc.tanh()).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (w, b) = params_for(3, 4, 4);
        let p = CellParams { weight: &w, bias: &b };
        let err = lstm_step(&[1.0, 2.0], &[0.0; 4], &[0.0; 4], p).unwrap_err();
        assert!(matches!(err, crate::Error::Shape(_)));
    }

    #[test]
    fn unknown_nonlinearity_is_config_error() {
        let err = "selu".parse::<Nonlinearity>().unwrap_err();
        assert!(matches!(err, crate::Error::Config(_)));
    }
}
