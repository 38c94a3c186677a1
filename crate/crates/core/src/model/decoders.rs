//! Recurrent decoder with latent gate injection, and the deconvolutional decoder.

use dualnlg_tensor::init::{named_rng, xavier_uniform};
use dualnlg_tensor::{dropout, Graph, Linear, LstmCell, ParamId, ParamStore, Tensor, Var};
use rand_chacha::ChaCha8Rng;

use crate::corpus::vocab::{BOS, EOS};
use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::encoders::{embedding, frame, ConvParams};

/// Recurrent state on a graph: LSTM `h`, `c`, and the gated act feature `d`.
#[derive(Debug, Clone, Copy)]
pub struct StepState {
    pub h: Var,
    pub c: Var,
    pub d: Var,
}

/// LSTM decoder. Each step reads the previous token; a sigmoid reading gate
/// decays the act feature `d_t = r_t ⊙ d_{t−1}` (with `d_0 = h_D`), and the
/// stacked gate pre-activations receive `W_d d_t` plus, when a latent is
/// present, `U h_e`. The output layer sees `[h_t; d_t]`.
#[derive(Debug, Clone)]
pub struct RecurrentDecoder {
    pub emb: ParamId,
    pub cell: LstmCell,
    pub read: Linear,
    pub da: ParamId,
    pub latent: Option<ParamId>,
    pub init: Linear,
    pub out: Linear,
    pub da_dim: usize,
    pub proj: usize,
}

impl RecurrentDecoder {
    pub fn register(store: &mut ParamStore, cfg: &ModelConfig, vocab: usize, with_latent: bool, seed: u64) -> Result<Self> {
        let (da_dim, h) = (cfg.da_dim(), cfg.dec_hidden);
        let emb = embedding(store, "dec.emb", vocab, cfg.embed, seed, None)?;
        let cell = LstmCell::register(store, "dec.lstm", cfg.embed, h, cfg.forget_bias, seed)?;
        let read = Linear::register(store, "dec.read", cfg.embed + h, da_dim, seed)?;
        let da = store.add("dec.da", xavier_uniform(&[4 * h, da_dim], &mut named_rng(seed, "dec.da")))?;
        let latent = if with_latent {
            Some(store.add("dec.latent", xavier_uniform(&[4 * h, cfg.proj], &mut named_rng(seed, "dec.latent")))?)
        } else {
            None
        };
        let init = Linear::register(store, "dec.init", da_dim + cfg.proj, h, seed)?;
        let out = Linear::register(store, "dec.out", h + da_dim, vocab, seed)?;
        Ok(Self { emb, cell, read, da, latent, init, out, da_dim, proj: cfg.proj })
    }

    /// Initial state `h_0 = tanh(W [h_D; h_e] + b)`, `c_0 = 0`, `d_0 = h_D`, and
    /// the per-sequence gate term `U h_e` (absent when `h_e` is `None`).
    pub fn start(&self, g: &mut Graph<'_>, h_d: Var, h_e: Option<Var>) -> Result<(StepState, Option<Var>)> {
        let he = match h_e {
            Some(v) => v,
            None => g.constant(Tensor::zeros(&[self.proj])),
        };
        let x = g.concat(&[h_d, he])?;
        let a = self.init.forward(g, x)?;
        let h = g.tanh(a);
        let c = g.constant(Tensor::zeros(&[self.cell.hidden]));
        let term = match (self.latent, h_e) {
            (Some(u), Some(he)) => {
                let u = g.param(u);
                Some(g.matvec(u, he)?)
            }
            _ => None,
        };
        Ok((StepState { h, c, d: h_d }, term))
    }

    /// One step; returns the new state and the output feature `[h_t; d_t]`.
    pub fn step(
        &self,
        g: &mut Graph<'_>,
        st: StepState,
        token: usize,
        latent_term: Option<Var>,
        drop: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<(StepState, Var)> {
        let table = g.param(self.emb);
        let x = g.row(table, token)?;
        let xh = g.concat(&[x, st.h])?;
        let r = self.read.forward(g, xh)?;
        let r = g.sigmoid(r);
        let d = g.mul(r, st.d)?;
        let wd = g.param(self.da);
        let mut extra = g.matvec(wd, d)?;
        if let Some(t) = latent_term {
            extra = g.add(extra, t)?;
        }
        let (h, c) = self.cell.step(g, x, st.h, st.c, Some(extra))?;
        let hd = match drop {
            Some((keep, rng)) => dropout(g, h, keep, rng, true)?,
            None => h,
        };
        let feat = g.concat(&[hd, d])?;
        Ok((StepState { h, c, d }, feat))
    }

    /// Log-distribution over the vocabulary for one output feature.
    pub fn log_probs(&self, g: &mut Graph<'_>, feat: Var) -> Result<Var> {
        let logits = self.out.forward(g, feat)?;
        Ok(g.log_softmax(logits))
    }

    /// `−Σ_t log p(u_t | u_<t)` over `ids` followed by EOS, with BOS as the first input.
    pub fn teacher_forced_nll(
        &self,
        g: &mut Graph<'_>,
        h_d: Var,
        h_e: Option<Var>,
        ids: &[usize],
        mut drop: Option<(f64, &mut ChaCha8Rng)>,
    ) -> Result<Var> {
        let (mut st, term) = self.start(g, h_d, h_e)?;
        let mut feats = Vec::with_capacity(ids.len() + 1);
        for &tok in std::iter::once(&BOS).chain(ids) {
            let d = drop.as_mut().map(|(k, r)| (*k, &mut **r));
            let (next, feat) = self.step(g, st, tok, term, d)?;
            st = next;
            feats.push(feat);
        }
        let targets: Vec<usize> = ids.iter().copied().chain(std::iter::once(EOS)).collect();
        let x = g.stack(&feats)?;
        let logits = self.out.forward_rows(g, x)?;
        let logp = g.log_softmax(logits);
        Ok(g.nll(logp, &targets)?)
    }
}

/// Mirror of the convolutional encoder: a lift of h_e to a `[1 × k]` map,
/// transposed convolutions back to the `[T × embed]` frame, then a
/// position-wise vocabulary projection.
#[derive(Debug, Clone)]
pub struct DeconvDecoder {
    pub lift: Linear,
    /// Indexed like the encoder layers; applied in reverse.
    pub layers: Vec<ConvParams>,
    pub out: Linear,
    pub max_len: usize,
}

impl DeconvDecoder {
    pub fn register(store: &mut ParamStore, cfg: &ModelConfig, vocab: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let top = cfg.conv.last().map(|l| l.filters).unwrap_or(0);
        let lift = Linear::register(store, "dcnn.lift", cfg.proj, top, seed)?;
        let mut layers = Vec::new();
        let mut d_in = cfg.embed;
        for (i, l) in cfg.conv.iter().enumerate() {
            let fname = format!("dcnn.deconv{i}.filters");
            let filters = store.add(&fname, xavier_uniform(&[l.filters, l.width, d_in], &mut named_rng(seed, &fname)))?;
            let bias = store.add(format!("dcnn.deconv{i}.bias"), Tensor::zeros(&[d_in]))?;
            layers.push(ConvParams { filters, bias, stride: l.stride });
            d_in = l.filters;
        }
        let out = Linear::register(store, "dcnn.out", cfg.embed, vocab, seed)?;
        Ok(Self { lift, layers, out, max_len: cfg.max_len })
    }

    /// Every map from the lifted `[1 × k]` to the `[T × V]` log-probabilities.
    pub fn maps(&self, g: &mut Graph<'_>, h_e: Var) -> Result<Vec<Var>> {
        let a = self.lift.forward(g, h_e)?;
        let a = g.relu(a);
        let k = g.shape(a)[0];
        let mut x = g.reshape(a, &[1, k])?;
        let mut maps = vec![x];
        for (i, l) in self.layers.iter().enumerate().rev() {
            let f = g.param(l.filters);
            let b = g.param(l.bias);
            let y = g.conv_transpose1d(x, f, l.stride)?;
            let y = g.add_row(y, b)?;
            x = if i > 0 { g.relu(y) } else { y };
            maps.push(x);
        }
        if g.shape(x)[0] != self.max_len {
            return Err(Error::Config(format!("deconvolution produced {} positions, expected {}", g.shape(x)[0], self.max_len)));
        }
        let logits = self.out.forward_rows(g, x)?;
        maps.push(g.log_softmax(logits));
        Ok(maps)
    }

    /// Per-position cross-entropy against the PAD-filled frame of `ids`.
    pub fn reconstruction_nll(&self, g: &mut Graph<'_>, h_e: Var, ids: &[usize]) -> Result<Var> {
        let maps = self.maps(g, h_e)?;
        let logp = *maps.last().expect("log-prob map");
        Ok(g.nll(logp, &frame(ids, self.max_len))?)
    }
}
