//! Act encoder (h_D) and utterance encoders (h_U).

use dualnlg_tensor::init::{named_rng, xavier_uniform};
use dualnlg_tensor::{dropout, Graph, LstmCell, ParamId, ParamStore, Tensor, Var};
use rand_chacha::ChaCha8Rng;

use crate::corpus::vocab::PAD;
use crate::error::{Error, Result};
use crate::model::config::ModelConfig;

pub(crate) fn embedding(
    store: &mut ParamStore,
    name: &str,
    rows: usize,
    dim: usize,
    seed: u64,
    zero_row: Option<usize>,
) -> Result<ParamId> {
    let mut t = xavier_uniform(&[rows, dim], &mut named_rng(seed, name));
    if let Some(r) = zero_row {
        t.data_mut()[r * dim..(r + 1) * dim].iter_mut().for_each(|v| *v = 0.0);
    }
    Ok(store.add(name, t)?)
}

/// Runs a bidirectional LSTM over `xs` and returns `[h_fwd_last; h_bwd_first]`.
pub(crate) fn bilstm(g: &mut Graph<'_>, fwd: &LstmCell, bwd: &LstmCell, xs: &[Var]) -> Result<Var> {
    let run = |g: &mut Graph<'_>, cell: &LstmCell, order: &mut dyn Iterator<Item = &Var>| -> Result<Var> {
        let mut h = g.constant(Tensor::zeros(&[cell.hidden]));
        let mut c = g.constant(Tensor::zeros(&[cell.hidden]));
        for &x in order {
            (h, c) = cell.step(g, x, h, c, None)?;
        }
        Ok(h)
    };
    let hf = run(g, fwd, &mut xs.iter())?;
    let hb = run(g, bwd, &mut xs.iter().rev())?;
    Ok(g.concat(&[hf, hb])?)
}

/// Slot-name and value embeddings concatenated per pair, then a BiLSTM.
#[derive(Debug, Clone)]
pub struct DaEncoder {
    pub slot_emb: ParamId,
    pub value_emb: ParamId,
    pub fwd: LstmCell,
    pub bwd: LstmCell,
}

impl DaEncoder {
    pub fn register(store: &mut ParamStore, cfg: &ModelConfig, slot_keys: usize, value_keys: usize, seed: u64) -> Result<Self> {
        let slot_emb = embedding(store, "da.slot_emb", slot_keys, cfg.embed, seed, None)?;
        let value_emb = embedding(store, "da.value_emb", value_keys, cfg.embed, seed, None)?;
        let fwd = LstmCell::register(store, "da.fwd", 2 * cfg.embed, cfg.da_hidden, cfg.forget_bias, seed)?;
        let bwd = LstmCell::register(store, "da.bwd", 2 * cfg.embed, cfg.da_hidden, cfg.forget_bias, seed)?;
        Ok(Self { slot_emb, value_emb, fwd, bwd })
    }

    /// `keys` are (slot key, value key) ids, as produced by the vocabulary.
    pub fn encode(&self, g: &mut Graph<'_>, keys: &[(usize, usize)]) -> Result<Var> {
        if keys.is_empty() {
            return Err(Error::Config("act encoder needs at least one key pair".into()));
        }
        let st = g.param(self.slot_emb);
        let vt = g.param(self.value_emb);
        let slots: Vec<usize> = keys.iter().map(|k| k.0).collect();
        let values: Vec<usize> = keys.iter().map(|k| k.1).collect();
        let s = g.gather(st, &slots, None)?;
        let v = g.gather(vt, &values, None)?;
        let mut xs = Vec::with_capacity(keys.len());
        for i in 0..keys.len() {
            let si = g.row(s, i)?;
            let vi = g.row(v, i)?;
            xs.push(g.concat(&[si, vi])?);
        }
        bilstm(g, &self.fwd, &self.bwd, &xs)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConvParams {
    pub filters: ParamId,
    pub bias: ParamId,
    pub stride: usize,
}

/// Three valid strided convolutions with ReLU over a PAD-filled frame.
#[derive(Debug, Clone)]
pub struct CnnEncoder {
    pub emb: ParamId,
    pub layers: Vec<ConvParams>,
    pub max_len: usize,
}

/// Pads with PAD (or truncates) to exactly `len` ids.
pub fn frame(ids: &[usize], len: usize) -> Vec<usize> {
    if ids.len() > len {
        log::warn!("utterance of {} tokens truncated to {len}", ids.len());
    }
    let mut out: Vec<usize> = ids.iter().copied().take(len).collect();
    out.resize(len, PAD);
    out
}

impl CnnEncoder {
    pub fn register(store: &mut ParamStore, cfg: &ModelConfig, vocab: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let emb = embedding(store, "utt.emb", vocab, cfg.embed, seed, Some(PAD))?;
        let mut layers = Vec::new();
        let mut d = cfg.embed;
        for (i, l) in cfg.conv.iter().enumerate() {
            let fname = format!("utt.conv{i}.filters");
            let filters = store.add(&fname, xavier_uniform(&[l.filters, l.width, d], &mut named_rng(seed, &fname)))?;
            let bias = store.add(format!("utt.conv{i}.bias"), Tensor::zeros(&[l.filters]))?;
            layers.push(ConvParams { filters, bias, stride: l.stride });
            d = l.filters;
        }
        Ok(Self { emb, layers, max_len: cfg.max_len })
    }

    /// Every feature map, from the embedded frame to the final `[1 × k]` map.
    pub fn feature_maps(&self, g: &mut Graph<'_>, ids: &[usize], drop: Option<(f64, &mut ChaCha8Rng)>) -> Result<Vec<Var>> {
        let framed = frame(ids, self.max_len);
        let table = g.param(self.emb);
        let mut x = g.gather(table, &framed, Some(PAD))?;
        if let Some((keep, rng)) = drop {
            x = dropout(g, x, keep, rng, true)?;
        }
        let mut maps = vec![x];
        for l in &self.layers {
            let f = g.param(l.filters);
            let b = g.param(l.bias);
            let y = g.conv1d(x, f, l.stride)?;
            let y = g.add_row(y, b)?;
            x = g.relu(y);
            maps.push(x);
        }
        Ok(maps)
    }

    pub fn encode(&self, g: &mut Graph<'_>, ids: &[usize], drop: Option<(f64, &mut ChaCha8Rng)>) -> Result<Var> {
        let maps = self.feature_maps(g, ids, drop)?;
        let last = *maps.last().expect("at least the embedding map");
        let n: usize = g.shape(last).iter().product();
        Ok(g.reshape(last, &[n])?)
    }
}

/// Token embeddings and a BiLSTM over the unpadded utterance.
#[derive(Debug, Clone)]
pub struct RnnEncoder {
    pub emb: ParamId,
    pub fwd: LstmCell,
    pub bwd: LstmCell,
}

impl RnnEncoder {
    pub fn register(store: &mut ParamStore, cfg: &ModelConfig, vocab: usize, seed: u64) -> Result<Self> {
        let emb = embedding(store, "utt.emb", vocab, cfg.embed, seed, Some(PAD))?;
        let fwd = LstmCell::register(store, "utt.fwd", cfg.embed, cfg.utt_hidden, cfg.forget_bias, seed)?;
        let bwd = LstmCell::register(store, "utt.bwd", cfg.embed, cfg.utt_hidden, cfg.forget_bias, seed)?;
        Ok(Self { emb, fwd, bwd })
    }

    pub fn encode(&self, g: &mut Graph<'_>, ids: &[usize], drop: Option<(f64, &mut ChaCha8Rng)>) -> Result<Var> {
        if ids.is_empty() {
            return Err(Error::Generation("cannot encode an empty utterance".into()));
        }
        let table = g.param(self.emb);
        let mut x = g.gather(table, ids, None)?;
        if let Some((keep, rng)) = drop {
            x = dropout(g, x, keep, rng, true)?;
        }
        let xs = (0..ids.len()).map(|i| g.row(x, i)).collect::<std::result::Result<Vec<_>, _>>()?;
        bilstm(g, &self.fwd, &self.bwd, &xs)
    }
}

#[derive(Debug, Clone)]
pub enum UtteranceEncoder {
    Cnn(CnnEncoder),
    Rnn(RnnEncoder),
}

impl UtteranceEncoder {
    pub fn encode(&self, g: &mut Graph<'_>, ids: &[usize], drop: Option<(f64, &mut ChaCha8Rng)>) -> Result<Var> {
        match self {
            UtteranceEncoder::Cnn(e) => e.encode(g, ids, drop),
            UtteranceEncoder::Rnn(e) => e.encode(g, ids, drop),
        }
    }
}
