//! Desk-scale pair encoder: token, segment and sinusoidal position
//! embeddings followed by a stack of single-head self-attention blocks over
//! the joint sequence. Each segment is mean-pooled separately and the pair
//! representation is `[u_a, u_b, (u_a - u_b)^2, u_a * u_b]`.
//!
//! Block: `y = x + softmax(x Wq (x Wk)^T / sqrt(d)) x Wv Wo`,
//! `x' = y + tanh(y W1 + b1) W2 + b2`.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::params::ParamSet;
use super::vocab::Vocab;
use super::{truncate_pair, PairEncoder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub width: usize,
    pub layers: usize,
    pub ff_width: usize,
    /// Scale applied to the fixed sinusoidal position signal.
    pub position_scale: f64,
    pub init_seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            width: 16,
            layers: 2,
            ff_width: 32,
            position_scale: 0.1,
            init_seed: 0,
        }
    }
}

const EMB: usize = 0;
const SEG: usize = 1;
const PER_LAYER: usize = 8;
// offsets within a layer
const WQ: usize = 0;
const WK: usize = 1;
const WV: usize = 2;
const WO: usize = 3;
const W1: usize = 4;
const B1: usize = 5;
const W2: usize = 6;
const B2: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct DeskEncoder {
    config: EncoderConfig,
    vocab: Vocab,
    params: ParamSet,
}

/// Token ids of a truncated pair; `len_a` leading ids belong to segment a.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTokens {
    pub ids: Vec<usize>,
    pub len_a: usize,
}

pub struct LayerTrace {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Array2<f64>,
    h: Array2<f64>,
    y: Array2<f64>,
    z: Array2<f64>,
}

pub struct DeskTrace {
    ids: Vec<usize>,
    len_a: usize,
    layers: Vec<LayerTrace>,
    ua: Array1<f64>,
    ub: Array1<f64>,
}

fn layer_names() -> [&'static str; PER_LAYER] {
    ["wq", "wk", "wv", "wo", "w1", "b1", "w2", "b2"]
}

impl DeskEncoder {
    /// Fresh encoder with parameters drawn from `config.init_seed`.
    pub fn new(config: EncoderConfig, vocab: Vocab) -> Self {
        let d = config.width;
        let f = config.ff_width;
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        let mut gauss = |rows: usize, cols: usize, std: f64| {
            let n = Normal::new(0.0, std).expect("positive std");
            Array2::from_shape_fn((rows, cols), |_| n.sample(&mut rng))
        };
        let mut params = ParamSet::new();
        params.push("emb", gauss(vocab.len(), d, 1.0 / (d as f64).sqrt()));
        params.push("seg", gauss(2, d, 0.1));
        let inv_d = 1.0 / (d as f64).sqrt();
        let inv_f = 1.0 / (f as f64).sqrt();
        for l in 0..config.layers {
            let names = layer_names();
            params.push(format!("layer{l}.{}", names[WQ]), gauss(d, d, inv_d));
            params.push(format!("layer{l}.{}", names[WK]), gauss(d, d, inv_d));
            params.push(format!("layer{l}.{}", names[WV]), gauss(d, d, inv_d));
            params.push(format!("layer{l}.{}", names[WO]), gauss(d, d, 0.5 * inv_d));
            params.push(format!("layer{l}.{}", names[W1]), gauss(d, f, inv_d));
            params.push(format!("layer{l}.{}", names[B1]), Array2::zeros((1, f)));
            params.push(format!("layer{l}.{}", names[W2]), gauss(f, d, 0.5 * inv_f));
            params.push(format!("layer{l}.{}", names[B2]), Array2::zeros((1, d)));
        }
        Self { config, vocab, params }
    }

    /// Rebuilds an encoder from stored parts, checking every tensor shape.
    pub fn from_parts(config: EncoderConfig, vocab: Vocab, params: ParamSet) -> Result<Self, String> {
        let reference = Self::new(
            EncoderConfig {
                init_seed: 0,
                ..config.clone()
            },
            vocab.clone(),
        );
        if reference.params.len() != params.len() {
            return Err(format!(
                "expected {} tensors, found {}",
                reference.params.len(),
                params.len()
            ));
        }
        for i in 0..params.len() {
            let (want, got) = (reference.params.get(i), params.get(i));
            if reference.params.name(i) != params.name(i) || want.shape() != got.shape() {
                return Err(format!(
                    "tensor {i}: expected {} {:?}, found {} {:?}",
                    reference.params.name(i),
                    want.shape(),
                    params.name(i),
                    got.shape()
                ));
            }
        }
        Ok(Self { config, vocab, params })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn layer(&self, l: usize, which: usize) -> &Array2<f64> {
        self.params.get(2 + l * PER_LAYER + which)
    }

    fn position(&self, pos: usize) -> Array1<f64> {
        let d = self.config.width;
        Array1::from_shape_fn(d, |j| {
            let rate = 1.0 / 10000f64.powf((j - j % 2) as f64 / d as f64);
            let angle = pos as f64 * rate;
            let v = if j % 2 == 0 { angle.sin() } else { angle.cos() };
            v * self.config.position_scale
        })
    }

    fn embed(&self, ids: &[usize], len_a: usize) -> Array2<f64> {
        let emb = self.params.get(EMB);
        let seg = self.params.get(SEG);
        let mut x = Array2::zeros((ids.len(), self.config.width));
        for (i, &t) in ids.iter().enumerate() {
            let (segment, pos) = if i < len_a { (0, i) } else { (1, i - len_a) };
            let mut row = x.row_mut(i);
            row += &emb.row(t);
            row += &seg.row(segment);
            row += &self.position(pos);
        }
        x
    }
}

fn softmax_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

impl PairEncoder for DeskEncoder {
    type Input = PairTokens;
    type Trace = DeskTrace;

    fn output_width(&self) -> usize {
        4 * self.config.width
    }

    fn prepare(&self, text_a: &str, text_b: &str, max_tokens: usize) -> PairTokens {
        let mut a = self.vocab.encode(text_a);
        let mut b = self.vocab.encode(text_b);
        if a.is_empty() {
            a.push(0);
        }
        if b.is_empty() {
            b.push(0);
        }
        truncate_pair(&mut a, &mut b, max_tokens);
        let len_a = a.len();
        a.extend(b);
        PairTokens { ids: a, len_a }
    }

    fn forward(&self, input: &PairTokens) -> (Array1<f64>, DeskTrace) {
        let d = self.config.width;
        let scale = 1.0 / (d as f64).sqrt();
        let len_a = input.len_a;
        let mut x = self.embed(&input.ids, len_a);
        let mut layers = Vec::with_capacity(self.config.layers);
        for l in 0..self.config.layers {
            let q = x.dot(self.layer(l, WQ));
            let k = x.dot(self.layer(l, WK));
            let v = x.dot(self.layer(l, WV));
            let mut attn = q.dot(&k.t()) * scale;
            softmax_rows(&mut attn);
            let h = attn.dot(&v);
            let y = &x + &h.dot(self.layer(l, WO));
            let z = (y.dot(self.layer(l, W1)) + self.layer(l, B1)).mapv(f64::tanh);
            let next = &y + &z.dot(self.layer(l, W2)) + self.layer(l, B2);
            layers.push(LayerTrace {
                x,
                q,
                k,
                v,
                attn,
                h,
                y,
                z,
            });
            x = next;
        }
        let ua = x.slice(s![..len_a, ..]).mean_axis(Axis(0)).expect("segment a non-empty");
        let ub = x.slice(s![len_a.., ..]).mean_axis(Axis(0)).expect("segment b non-empty");
        let mut out = Array1::zeros(4 * d);
        let diff = &ua - &ub;
        out.slice_mut(s![..d]).assign(&ua);
        out.slice_mut(s![d..2 * d]).assign(&ub);
        out.slice_mut(s![2 * d..3 * d]).assign(&(&diff * &diff));
        out.slice_mut(s![3 * d..]).assign(&(&ua * &ub));
        let trace = DeskTrace {
            ids: input.ids.clone(),
            len_a,
            layers,
            ua,
            ub,
        };
        (out, trace)
    }

    fn backward(&self, trace: &DeskTrace, d_out: ArrayView1<f64>, grads: &mut ParamSet) {
        let d = self.config.width;
        let scale = 1.0 / (d as f64).sqrt();
        let (ua, ub) = (&trace.ua, &trace.ub);
        let f1 = d_out.slice(s![..d]);
        let f2 = d_out.slice(s![d..2 * d]);
        let f3 = d_out.slice(s![2 * d..3 * d]);
        let f4 = d_out.slice(s![3 * d..]);
        let diff = ua - ub;
        let two_diff_f3 = &diff * &f3 * 2.0;
        let dua = &f1 + &two_diff_f3 + &(ub * &f4);
        let dub = &f2 - &two_diff_f3 + &(ua * &f4);

        let n = trace.ids.len();
        let len_a = trace.len_a;
        let len_b = n - len_a;
        let mut dx = Array2::zeros((n, d));
        for i in 0..n {
            if i < len_a {
                dx.row_mut(i).assign(&(&dua / len_a as f64));
            } else {
                dx.row_mut(i).assign(&(&dub / len_b as f64));
            }
        }

        for l in (0..self.config.layers).rev() {
            let t = &trace.layers[l];
            let base = 2 + l * PER_LAYER;
            // x' = y + z W2 + b2
            *grads.get_mut(base + W2) += &t.z.t().dot(&dx);
            *grads.get_mut(base + B2) += &dx.sum_axis(Axis(0)).insert_axis(Axis(0));
            let dz = dx.dot(&self.layer(l, W2).t());
            let dz_pre = dz * &t.z.mapv(|z| 1.0 - z * z);
            *grads.get_mut(base + W1) += &t.y.t().dot(&dz_pre);
            *grads.get_mut(base + B1) += &dz_pre.sum_axis(Axis(0)).insert_axis(Axis(0));
            let dy = &dx + &dz_pre.dot(&self.layer(l, W1).t());
            // y = x + h Wo
            *grads.get_mut(base + WO) += &t.h.t().dot(&dy);
            let dh = dy.dot(&self.layer(l, WO).t());
            let da = dh.dot(&t.v.t());
            let dv = t.attn.t().dot(&dh);
            let row_dot = (&da * &t.attn).sum_axis(Axis(1)).insert_axis(Axis(1));
            let ds = &t.attn * &(&da - &row_dot);
            let dq = ds.dot(&t.k) * scale;
            let dk = ds.t().dot(&t.q) * scale;
            *grads.get_mut(base + WQ) += &t.x.t().dot(&dq);
            *grads.get_mut(base + WK) += &t.x.t().dot(&dk);
            *grads.get_mut(base + WV) += &t.x.t().dot(&dv);
            dx = dy
                + dq.dot(&self.layer(l, WQ).t())
                + dk.dot(&self.layer(l, WK).t())
                + dv.dot(&self.layer(l, WV).t());
        }

        for (i, &tok) in trace.ids.iter().enumerate() {
            let segment = usize::from(i >= len_a);
            let row = dx.row(i);
            let mut e = grads.get_mut(EMB).row_mut(tok);
            e += &row;
            let mut sg = grads.get_mut(SEG).row_mut(segment);
            sg += &row;
        }
    }

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }
}
