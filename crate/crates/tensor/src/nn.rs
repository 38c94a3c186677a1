//! Layer-level helpers built from graph primitives.

use rand::Rng;

use crate::error::{Result, TensorError};
use crate::graph::{Graph, Var};
use crate::init::{named_rng, xavier_uniform};
use crate::param::{ParamId, ParamStore};
use crate::tensor::Tensor;

/// Affine map `W x + b`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn register(store: &mut ParamStore, name: &str, input: usize, output: usize, seed: u64) -> Result<Self> {
        let wname = format!("{name}.weight");
        let weight = store.add(&wname, xavier_uniform(&[output, input], &mut named_rng(seed, &wname)))?;
        let bias = store.add(format!("{name}.bias"), Tensor::zeros(&[output]))?;
        Ok(Self { weight, bias, input, output })
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        let wx = g.matvec(w, x)?;
        g.add(wx, b)
    }

    /// Row-wise application to a `[n × input]` matrix.
    pub fn forward_rows(&self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        let wx = g.matmul_nt(x, w)?;
        g.add_row(wx, b)
    }
}

/// LSTM cell with the four gates stacked as `[i; f; o; g]` in a single
/// `[4H × (input + H)]` weight acting on `[x; h]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmCell {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub hidden: usize,
}

impl LstmCell {
    /// Xavier weights, zero bias except the forget gate at `forget_bias`.
    pub fn register(store: &mut ParamStore, name: &str, input: usize, hidden: usize, forget_bias: f64, seed: u64) -> Result<Self> {
        let wname = format!("{name}.weight");
        let weight = store.add(&wname, xavier_uniform(&[4 * hidden, input + hidden], &mut named_rng(seed, &wname)))?;
        let mut b = vec![0.0; 4 * hidden];
        b[hidden..2 * hidden].iter_mut().for_each(|v| *v = forget_bias);
        let bias = store.add(format!("{name}.bias"), Tensor::vector(b))?;
        Ok(Self { weight, bias, input, hidden })
    }

    /// One step; `extra` is added to the stacked gate pre-activations.
    pub fn step(&self, g: &mut Graph<'_>, x: Var, h: Var, c: Var, extra: Option<Var>) -> Result<(Var, Var)> {
        lstm_step(g, x, h, c, self, extra)
    }
}

/// Standard LSTM update:
/// `i, f, o = σ(·)`, `ĉ = tanh(·)`, `c' = f⊙c + i⊙ĉ`, `h' = o⊙tanh(c')`.
pub fn lstm_step(g: &mut Graph<'_>, x: Var, h: Var, c: Var, cell: &LstmCell, extra: Option<Var>) -> Result<(Var, Var)> {
    let hd = cell.hidden;
    if g.shape(x) != [cell.input] || g.shape(h) != [hd] || g.shape(c) != [hd] {
        return Err(TensorError::ShapeMismatch {
            op: "lstm_step",
            detail: format!("x {:?}, h {:?}, c {:?} for input {} hidden {hd}", g.shape(x), g.shape(h), g.shape(c), cell.input),
        });
    }
    let xh = g.concat(&[x, h])?;
    let w = g.param(cell.weight);
    let b = g.param(cell.bias);
    let wx = g.matvec(w, xh)?;
    let mut pre = g.add(wx, b)?;
    if let Some(e) = extra {
        pre = g.add(pre, e)?;
    }
    let i_pre = g.slice(pre, 0, hd)?;
    let f_pre = g.slice(pre, hd, hd)?;
    let o_pre = g.slice(pre, 2 * hd, hd)?;
    let c_pre = g.slice(pre, 3 * hd, hd)?;
    let i = g.sigmoid(i_pre);
    let f = g.sigmoid(f_pre);
    let o = g.sigmoid(o_pre);
    let cand = g.tanh(c_pre);
    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_next = g.add(keep, write)?;
    let tc = g.tanh(c_next);
    let h_next = g.mul(o, tc)?;
    Ok((h_next, c_next))
}

/// Inverted dropout: in training mode each entry is kept with probability
/// `keep_rate` and scaled by `1 / keep_rate`; otherwise the input passes through.
pub fn dropout<R: Rng>(g: &mut Graph<'_>, x: Var, keep_rate: f64, rng: &mut R, train: bool) -> Result<Var> {
    if !(keep_rate > 0.0 && keep_rate <= 1.0) {
        return Err(TensorError::InvalidArgument(format!("keep rate {keep_rate} outside (0, 1]")));
    }
    if !train || keep_rate == 1.0 {
        return Ok(x);
    }
    let shape = g.shape(x).to_vec();
    let n = shape.iter().product();
    let scale = 1.0 / keep_rate;
    let mask: Vec<f64> = (0..n).map(|_| if rng.gen::<f64>() < keep_rate { scale } else { 0.0 }).collect();
    let m = g.constant(Tensor::new(shape, mask)?);
    g.mul(x, m)
}
