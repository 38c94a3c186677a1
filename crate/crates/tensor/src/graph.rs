//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every operation applied to its [`Var`]s in creation
//! order. Parameters are read straight out of the borrowed [`ParamStore`], so
//! building a graph never copies weights. [`Graph::backward`] walks the tape
//! once in reverse and returns a [`Gradients`] table; the caller folds the
//! parameter part of it back into the store with [`ParamStore::accumulate`].

use std::collections::HashMap;

use crate::error::{Result, TensorError};
use crate::kernels::{self, View};
use crate::param::{ParamId, ParamStore};
use crate::tensor::Tensor;

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    Param,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Exp(Var),
    Clamp(Var, f64, f64),
    Sum(Var),
    MatVec(Var, Var),
    MatMul { a: Var, b: Var, trans_b: bool },
    AddRow(Var, Var),
    Concat(Vec<Var>),
    Slice { src: Var, start: usize },
    Stack(Vec<Var>),
    Reshape(Var),
    Gather { table: Var, indices: Vec<usize>, padding: Option<usize> },
    Conv1d { input: Var, filters: Var, stride: usize },
    ConvT1d { input: Var, filters: Var, stride: usize },
    LogSoftmax(Var),
    Nll { logp: Var, targets: Vec<usize> },
}

#[derive(Debug)]
enum Value {
    Owned(Vec<f64>),
    Param(ParamId),
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    value: Value,
    op: Op,
    requires_grad: bool,
}

pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    param_vars: HashMap<ParamId, Var>,
}

fn mismatch(op: &'static str, detail: String) -> TensorError {
    TensorError::ShapeMismatch { op, detail }
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Self { store, nodes: Vec::new(), param_vars: HashMap::new() }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>, op: Op, requires_grad: bool) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.nodes.push(Node { shape, value: Value::Owned(data), op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn push_op(&mut self, shape: Vec<usize>, data: Vec<f64>, op: Op, inputs: &[Var]) -> Var {
        let rg = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.push(shape, data, op, rg)
    }

    /// Leaf node for a parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(&v) = self.param_vars.get(&id) {
            return v;
        }
        let shape = self.store.value(id).shape().to_vec();
        self.nodes.push(Node { shape, value: Value::Param(id), op: Op::Param, requires_grad: true });
        let v = Var(self.nodes.len() - 1);
        self.param_vars.insert(id, v);
        v
    }

    /// Leaf that receives a gradient (for inputs under test).
    pub fn input(&mut self, t: Tensor) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Leaf, true)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Constant, false)
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn data(&self, v: Var) -> &[f64] {
        match &self.nodes[v.0].value {
            Value::Owned(d) => d,
            Value::Param(id) => self.store.value(*id).data(),
        }
    }

    pub fn value(&self, v: Var) -> Tensor {
        Tensor::from_parts(self.shape(v).to_vec(), self.data(v).to_vec())
    }

    pub fn scalar(&self, v: Var) -> Option<f64> {
        let d = self.data(v);
        (d.len() == 1).then(|| d[0])
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<Vec<usize>> {
        if self.shape(a) != self.shape(b) {
            return Err(mismatch(op, format!("{:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        Ok(self.shape(a).to_vec())
    }

    fn zip_map(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.data(a).iter().zip(self.data(b)).map(|(x, y)| f(*x, *y)).collect()
    }

    fn unary(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let data = self.data(a).iter().map(|x| f(*x)).collect();
        let shape = self.shape(a).to_vec();
        self.push_op(shape, data, op, &[a])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = self.same_shape("add", a, b)?;
        let data = self.zip_map(a, b, |x, y| x + y);
        Ok(self.push_op(shape, data, Op::Add(a, b), &[a, b]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = self.same_shape("sub", a, b)?;
        let data = self.zip_map(a, b, |x, y| x - y);
        Ok(self.push_op(shape, data, Op::Sub(a, b), &[a, b]))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let shape = self.same_shape("mul", a, b)?;
        let data = self.zip_map(a, b, |x, y| x * y);
        Ok(self.push_op(shape, data, Op::Mul(a, b), &[a, b]))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.unary(a, Op::Scale(a, s), |x| x * s)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        self.unary(a, Op::AddScalar(a), |x| x + s)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), kernels::sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| x.max(0.0))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(a, Op::Clamp(a, lo, hi), |x| x.clamp(lo, hi))
    }

    /// Sum of all entries, as a scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        self.push_op(vec![], vec![s], Op::Sum(a), &[a])
    }

    /// `w · x` for `w: [o × i]`, `x: [i]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (ws, xs) = (self.shape(w), self.shape(x));
        if ws.len() != 2 || xs.len() != 1 || ws[1] != xs[0] {
            return Err(mismatch("matvec", format!("{ws:?} · {xs:?}")));
        }
        let (o, i) = (ws[0], ws[1]);
        let data = kernels::matvec(self.data(w), self.data(x), o, i);
        Ok(self.push_op(vec![o], data, Op::MatVec(w, x), &[w, x]))
    }

    /// `a · b` for `a: [m × k]`, `b: [k × n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, false)
    }

    /// `a · bᵀ` for `a: [m × k]`, `b: [n × k]`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        self.matmul_impl(a, b, true)
    }

    fn matmul_impl(&mut self, a: Var, b: Var, trans_b: bool) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 {
            return Err(mismatch("matmul", format!("{sa:?} · {sb:?}")));
        }
        let (m, k) = (sa[0], sa[1]);
        let (kb, n) = if trans_b { (sb[1], sb[0]) } else { (sb[0], sb[1]) };
        if k != kb {
            return Err(mismatch("matmul", format!("{sa:?} · {sb:?} (trans_b={trans_b})")));
        }
        let av = View::row_major(self.data(a), m, k);
        let bv = if trans_b { View::row_major(self.data(b), n, k).t() } else { View::row_major(self.data(b), k, n) };
        let mut out = vec![0.0; m * n];
        kernels::gemm(av, bv, &mut out, 0.0);
        Ok(self.push_op(vec![m, n], out, Op::MatMul { a, b, trans_b }, &[a, b]))
    }

    /// Adds the vector `b: [n]` to every row of `a: [m × n]` (or to `a: [n]`).
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        let n = *sa.last().unwrap_or(&0);
        if sb.len() != 1 || sb[0] != n || sa.is_empty() {
            return Err(mismatch("add_row", format!("{sa:?} + {sb:?}")));
        }
        let bd = self.data(b);
        let data = self.data(a).iter().enumerate().map(|(i, x)| x + bd[i % n]).collect();
        Ok(self.push_op(sa, data, Op::AddRow(a, b), &[a, b]))
    }

    /// Concatenates 1-D vars.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let mut data = Vec::new();
        for &p in parts {
            if self.shape(p).len() != 1 {
                return Err(mismatch("concat", format!("part of shape {:?}", self.shape(p))));
            }
            data.extend_from_slice(self.data(p));
        }
        let n = data.len();
        Ok(self.push_op(vec![n], data, Op::Concat(parts.to_vec()), parts))
    }

    /// Contiguous sub-range `[start, start + len)` of a 1-D var.
    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Result<Var> {
        let s = self.shape(src);
        if s.len() != 1 || start + len > s[0] {
            return Err(mismatch("slice", format!("[{start}, {}) of {s:?}", start + len)));
        }
        let data = self.data(src)[start..start + len].to_vec();
        Ok(self.push_op(vec![len], data, Op::Slice { src, start }, &[src]))
    }

    /// Stacks equal-length 1-D vars as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Result<Var> {
        let first = rows.first().ok_or_else(|| mismatch("stack", "no rows".into()))?;
        let width = self.shape(*first).to_vec();
        let mut data = Vec::with_capacity(rows.len() * width.iter().product::<usize>());
        for &r in rows {
            if self.shape(r) != width.as_slice() || width.len() != 1 {
                return Err(mismatch("stack", format!("{:?} vs {width:?}", self.shape(r))));
            }
            data.extend_from_slice(self.data(r));
        }
        Ok(self.push_op(vec![rows.len(), width[0]], data, Op::Stack(rows.to_vec()), rows))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        if shape.iter().product::<usize>() != self.data(a).len() {
            return Err(mismatch("reshape", format!("{:?} -> {shape:?}", self.shape(a))));
        }
        let data = self.data(a).to_vec();
        Ok(self.push_op(shape.to_vec(), data, Op::Reshape(a), &[a]))
    }

    /// Row lookup in `table: [v × d]`; the `padding` row reads as zeros and
    /// gets no gradient.
    pub fn gather(&mut self, table: Var, indices: &[usize], padding: Option<usize>) -> Result<Var> {
        let s = self.shape(table).to_vec();
        if s.len() != 2 {
            return Err(mismatch("gather", format!("table shape {s:?}")));
        }
        let (v, d) = (s[0], s[1]);
        let td = self.data(table);
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            if i >= v {
                return Err(mismatch("gather", format!("index {i} out of {v} rows")));
            }
            if Some(i) == padding {
                data.extend(std::iter::repeat_n(0.0, d));
            } else {
                data.extend_from_slice(&td[i * d..(i + 1) * d]);
            }
        }
        let op = Op::Gather { table, indices: indices.to_vec(), padding };
        Ok(self.push_op(vec![indices.len(), d], data, op, &[table]))
    }

    /// Single embedding row as a 1-D var.
    pub fn row(&mut self, table: Var, index: usize) -> Result<Var> {
        let m = self.gather(table, &[index], None)?;
        let d = self.shape(m)[1];
        self.reshape(m, &[d])
    }

    /// Valid (unpadded) strided convolution: `input: [t × d]`, `filters: [k × h × d]`
    /// → `[(t − h) / stride + 1 × k]`.
    pub fn conv1d(&mut self, input: Var, filters: Var, stride: usize) -> Result<Var> {
        let (si, sf) = (self.shape(input).to_vec(), self.shape(filters).to_vec());
        if si.len() != 2 || sf.len() != 3 || si[1] != sf[2] {
            return Err(mismatch("conv1d", format!("input {si:?}, filters {sf:?}")));
        }
        if stride == 0 {
            return Err(TensorError::InvalidArgument("conv1d stride must be positive".into()));
        }
        let (t, d) = (si[0], si[1]);
        let (k, h) = (sf[0], sf[1]);
        if t < h {
            return Err(mismatch("conv1d", format!("input length {t} shorter than filter {h}")));
        }
        let t_out = (t - h) / stride + 1;
        let out = kernels::conv1d_forward(self.data(input), self.data(filters), d, h, k, stride, t_out);
        Ok(self.push_op(vec![t_out, k], out, Op::Conv1d { input, filters, stride }, &[input, filters]))
    }

    /// Transposed convolution, the adjoint of [`Graph::conv1d`] for fixed filters:
    /// `input: [t' × k]`, `filters: [k × h × d]` → `[(t' − 1)·stride + h × d]`.
    pub fn conv_transpose1d(&mut self, input: Var, filters: Var, stride: usize) -> Result<Var> {
        let (si, sf) = (self.shape(input).to_vec(), self.shape(filters).to_vec());
        if si.len() != 2 || sf.len() != 3 || si[1] != sf[0] || si[0] == 0 {
            return Err(mismatch("conv_transpose1d", format!("input {si:?}, filters {sf:?}")));
        }
        if stride == 0 {
            return Err(TensorError::InvalidArgument("conv_transpose1d stride must be positive".into()));
        }
        let (t_in, k) = (si[0], si[1]);
        let (h, d) = (sf[1], sf[2]);
        let t_out = (t_in - 1) * stride + h;
        let mut cols = vec![0.0; t_in * h * d];
        kernels::gemm(View::row_major(self.data(input), t_in, k), View::row_major(self.data(filters), k, h * d), &mut cols, 0.0);
        let mut out = vec![0.0; t_out * d];
        kernels::col2im_add(&cols, &mut out, d, h, stride, t_in);
        Ok(self.push_op(vec![t_out, d], out, Op::ConvT1d { input, filters, stride }, &[input, filters]))
    }

    /// Log-softmax over the last axis.
    pub fn log_softmax(&mut self, a: Var) -> Var {
        let n = *self.shape(a).last().unwrap_or(&1);
        let mut data = self.data(a).to_vec();
        for row in data.chunks_mut(n.max(1)) {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
            row.iter_mut().for_each(|x| *x -= lse);
        }
        let shape = self.shape(a).to_vec();
        self.push_op(shape, data, Op::LogSoftmax(a), &[a])
    }

    /// Negative log-likelihood `−Σ_r logp[r, targets[r]]` for `logp: [n × v]` or `[v]`.
    pub fn nll(&mut self, logp: Var, targets: &[usize]) -> Result<Var> {
        let s = self.shape(logp).to_vec();
        let (rows, v) = match s.as_slice() {
            [v] => (1, *v),
            [r, v] => (*r, *v),
            _ => return Err(mismatch("nll", format!("log-prob shape {s:?}"))),
        };
        if targets.len() != rows || targets.iter().any(|&t| t >= v) {
            return Err(mismatch("nll", format!("{} targets for {s:?}", targets.len())));
        }
        let d = self.data(logp);
        let total = -targets.iter().enumerate().map(|(r, &t)| d[r * v + t]).sum::<f64>();
        Ok(self.push_op(vec![], vec![total], Op::Nll { logp, targets: targets.to_vec() }, &[logp]))
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.data(loss).len() != 1 {
            return Err(TensorError::NotScalar(self.shape(loss).to_vec()));
        }
        if !self.data(loss)[0].is_finite() {
            return Err(TensorError::NonFinite { context: "loss".into() });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        let params = self.param_vars.iter().filter(|(_, v)| grads[v.0].is_some()).map(|(id, v)| (*id, v.0)).collect::<Vec<_>>();
        let mut params = params;
        params.sort();
        Ok(Gradients { nodes: grads, params })
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        let y = self.data(Var(i));
        match &node.op {
            Op::Leaf | Op::Constant | Op::Param => {}
            Op::Add(a, b) => {
                self.acc(grads, *a, |ga| kernels::axpy(ga, g, 1.0));
                self.acc(grads, *b, |gb| kernels::axpy(gb, g, 1.0));
            }
            Op::Sub(a, b) => {
                self.acc(grads, *a, |ga| kernels::axpy(ga, g, 1.0));
                self.acc(grads, *b, |gb| kernels::axpy(gb, g, -1.0));
            }
            Op::Mul(a, b) => {
                let (ad, bd) = (self.data(*a), self.data(*b));
                self.acc(grads, *a, |ga| ga.iter_mut().zip(g).zip(bd).for_each(|((o, g), b)| *o += g * b));
                self.acc(grads, *b, |gb| gb.iter_mut().zip(g).zip(ad).for_each(|((o, g), a)| *o += g * a));
            }
            Op::Scale(a, s) => self.acc(grads, *a, |ga| kernels::axpy(ga, g, *s)),
            Op::AddScalar(a) | Op::Reshape(a) => self.acc(grads, *a, |ga| kernels::axpy(ga, g, 1.0)),
            Op::Sigmoid(a) => self.acc(grads, *a, |ga| ga.iter_mut().zip(g).zip(y).for_each(|((o, g), y)| *o += g * y * (1.0 - y))),
            Op::Tanh(a) => self.acc(grads, *a, |ga| ga.iter_mut().zip(g).zip(y).for_each(|((o, g), y)| *o += g * (1.0 - y * y))),
            Op::Relu(a) => self.acc(grads, *a, |ga| {
                ga.iter_mut().zip(g).zip(y).for_each(|((o, g), y)| {
                    if *y > 0.0 {
                        *o += g
                    }
                })
            }),
            Op::Exp(a) => self.acc(grads, *a, |ga| ga.iter_mut().zip(g).zip(y).for_each(|((o, g), y)| *o += g * y)),
            Op::Clamp(a, lo, hi) => {
                let x = self.data(*a);
                self.acc(grads, *a, |ga| {
                    ga.iter_mut().zip(g).zip(x).for_each(|((o, g), x)| {
                        if *x >= *lo && *x <= *hi {
                            *o += g
                        }
                    })
                })
            }
            Op::Sum(a) => self.acc(grads, *a, |ga| ga.iter_mut().for_each(|o| *o += g[0])),
            Op::MatVec(w, x) => {
                let (o, n) = (self.shape(*w)[0], self.shape(*w)[1]);
                let (wd, xd) = (self.data(*w), self.data(*x));
                self.acc(grads, *w, |gw| {
                    for r in 0..o {
                        if g[r] != 0.0 {
                            kernels::axpy(&mut gw[r * n..(r + 1) * n], xd, g[r]);
                        }
                    }
                });
                self.acc(grads, *x, |gx| {
                    for r in 0..o {
                        if g[r] != 0.0 {
                            kernels::axpy(gx, &wd[r * n..(r + 1) * n], g[r]);
                        }
                    }
                });
            }
            Op::MatMul { a, b, trans_b } => {
                let (m, k) = (self.shape(*a)[0], self.shape(*a)[1]);
                let n = node.shape[1];
                let gv = View::row_major(g, m, n);
                let (ad, bd) = (self.data(*a), self.data(*b));
                self.acc(grads, *a, |ga| {
                    // ga[m×k] += g[m×n] · bᵀ
                    let bt = if *trans_b { View::row_major(bd, n, k) } else { View::row_major(bd, k, n).t() };
                    kernels::gemm(gv, bt, ga, 1.0);
                });
                self.acc(grads, *b, |gb| {
                    let av = View::row_major(ad, m, k);
                    if *trans_b {
                        // gb[n×k] += gᵀ · a
                        kernels::gemm(gv.t(), av, gb, 1.0);
                    } else {
                        // gb[k×n] += aᵀ · g
                        kernels::gemm(av.t(), gv, gb, 1.0);
                    }
                });
            }
            Op::AddRow(a, b) => {
                let n = self.shape(*b)[0];
                self.acc(grads, *a, |ga| kernels::axpy(ga, g, 1.0));
                self.acc(grads, *b, |gb| {
                    for row in g.chunks(n) {
                        kernels::axpy(gb, row, 1.0);
                    }
                });
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for p in parts {
                    let len = self.data(*p).len();
                    self.acc(grads, *p, |gp| kernels::axpy(gp, &g[off..off + len], 1.0));
                    off += len;
                }
            }
            Op::Slice { src, start } => {
                let len = g.len();
                self.acc(grads, *src, |gs| kernels::axpy(&mut gs[*start..*start + len], g, 1.0));
            }
            Op::Stack(rows) => {
                let w = node.shape[1];
                for (r, v) in rows.iter().enumerate() {
                    self.acc(grads, *v, |gr| kernels::axpy(gr, &g[r * w..(r + 1) * w], 1.0));
                }
            }
            Op::Gather { table, indices, padding } => {
                let d = node.shape[1];
                self.acc(grads, *table, |gt| {
                    for (r, &idx) in indices.iter().enumerate() {
                        if Some(idx) != *padding {
                            kernels::axpy(&mut gt[idx * d..(idx + 1) * d], &g[r * d..(r + 1) * d], 1.0);
                        }
                    }
                });
            }
            Op::Conv1d { input, filters, stride } => {
                let (d, k, h) = (self.shape(*input)[1], self.shape(*filters)[0], self.shape(*filters)[1]);
                let t_out = node.shape[0];
                let hd = h * d;
                let gv = View::row_major(g, t_out, k);
                let (xd, fd) = (self.data(*input), self.data(*filters));
                self.acc(grads, *filters, |gf| {
                    let windows = View { data: xd, rows: t_out, cols: hd, rs: stride * d, cs: 1 };
                    kernels::gemm(gv.t(), windows, gf, 1.0);
                });
                self.acc(grads, *input, |gx| {
                    let mut cols = vec![0.0; t_out * hd];
                    kernels::gemm(gv, View::row_major(fd, k, hd), &mut cols, 0.0);
                    kernels::col2im_add(&cols, gx, d, h, *stride, t_out);
                });
            }
            Op::ConvT1d { input, filters, stride } => {
                let (t_in, k) = (self.shape(*input)[0], self.shape(*input)[1]);
                let (h, d) = (self.shape(*filters)[1], self.shape(*filters)[2]);
                let hd = h * d;
                let gwin = View { data: g, rows: t_in, cols: hd, rs: stride * d, cs: 1 };
                let (xd, fd) = (self.data(*input), self.data(*filters));
                self.acc(grads, *input, |gx| kernels::gemm(gwin, View::row_major(fd, k, hd).t(), gx, 1.0));
                self.acc(grads, *filters, |gf| kernels::gemm(View::row_major(xd, t_in, k).t(), gwin, gf, 1.0));
            }
            Op::LogSoftmax(a) => {
                let n = *node.shape.last().unwrap_or(&1);
                self.acc(grads, *a, |ga| {
                    for ((ga, g), y) in ga.chunks_mut(n).zip(g.chunks(n)).zip(y.chunks(n)) {
                        let gs: f64 = g.iter().sum();
                        for j in 0..n {
                            ga[j] += g[j] - y[j].exp() * gs;
                        }
                    }
                });
            }
            Op::Nll { logp, targets } => {
                let v = *self.shape(*logp).last().unwrap();
                self.acc(grads, *logp, |gl| {
                    for (r, &t) in targets.iter().enumerate() {
                        gl[r * v + t] -= g[0];
                    }
                });
            }
        }
    }

    fn acc(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.nodes[v.0].requires_grad {
            return;
        }
        let n = self.data(v).len();
        let buf = grads[v.0].get_or_insert_with(|| vec![0.0; n]);
        f(buf);
    }
}

/// Result of [`Graph::backward`].
pub struct Gradients {
    nodes: Vec<Option<Vec<f64>>>,
    params: Vec<(ParamId, usize)>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`, if it was reached.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.nodes.get(v.0).and_then(|g| g.as_deref())
    }

    /// Parameters reached by the sweep, in id order.
    pub fn params(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.params.iter().map(|(id, n)| (*id, self.nodes[*n].as_deref().unwrap()))
    }

    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        self.params.iter().find(|(p, _)| *p == id).and_then(|(_, n)| self.nodes[*n].as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_ones() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![1.0, 2.0, 3.0])).unwrap();
        let mut g = Graph::new(&store);
        let pv = g.param(p);
        let loss = g.sum(pv);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.param(p).unwrap(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn square_gradient_is_twice_value() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![1.0, 2.0, 3.0])).unwrap();
        let mut g = Graph::new(&store);
        let pv = g.param(p);
        let sq = g.mul(pv, pv).unwrap();
        let loss = g.sum(sq);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.param(p).unwrap(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn unreachable_params_get_no_gradient() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![1.0])).unwrap();
        let q = store.add("q", Tensor::vector(vec![1.0])).unwrap();
        let mut g = Graph::new(&store);
        let pv = g.param(p);
        let _qv = g.param(q);
        let loss = g.sum(pv);
        let grads = g.backward(loss).unwrap();
        assert!(grads.param(q).is_none());
        store.accumulate(&grads, 1.0);
        assert_eq!(store.get(q).grad.data(), &[0.0]);
        assert_eq!(store.get(p).grad.data(), &[1.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.input(Tensor::vector(vec![1.0, 2.0]));
        assert!(matches!(g.backward(x), Err(TensorError::NotScalar(_))));
    }

    #[test]
    fn conv1d_default_geometry_shapes() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(Tensor::zeros(&[73, 100]));
        let f = g.constant(Tensor::zeros(&[300, 5, 100]));
        let y = g.conv1d(x, f, 2).unwrap();
        assert_eq!(g.shape(y), &[35, 300]);
        let x = g.constant(Tensor::zeros(&[16, 600]));
        let f = g.constant(Tensor::zeros(&[100, 16, 600]));
        let y = g.conv1d(x, f, 2).unwrap();
        assert_eq!(g.shape(y), &[1, 100]);
    }

    #[test]
    fn conv1d_single_tap_identity() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(Tensor::new(vec![3, 1], vec![0.5, -1.0, 2.0]).unwrap());
        let f = g.constant(Tensor::full(&[1, 1, 1], 1.0));
        let y = g.conv1d(x, f, 1).unwrap();
        assert_eq!(g.data(y), &[0.5, -1.0, 2.0]);
    }

    #[test]
    fn conv1d_errors() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(Tensor::zeros(&[4, 3]));
        let f = g.constant(Tensor::zeros(&[2, 2, 5]));
        assert!(g.conv1d(x, f, 1).is_err());
        let f = g.constant(Tensor::zeros(&[2, 5, 3]));
        assert!(g.conv1d(x, f, 1).is_err());
    }

    #[test]
    fn transposed_conv_shapes() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(Tensor::zeros(&[1, 100]));
        let f = g.constant(Tensor::zeros(&[100, 16, 600]));
        let y = g.conv_transpose1d(x, f, 2).unwrap();
        assert_eq!(g.shape(y), &[16, 600]);
        let x = g.constant(Tensor::zeros(&[16, 600]));
        let f = g.constant(Tensor::zeros(&[600, 5, 300]));
        let y = g.conv_transpose1d(x, f, 2).unwrap();
        assert_eq!(g.shape(y), &[35, 300]);
    }

    #[test]
    fn log_softmax_rows_normalise() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, -5.0, 0.0, 5.0]).unwrap());
        let y = g.log_softmax(x);
        for row in g.data(y).chunks(3) {
            let s: f64 = row.iter().map(|v| v.exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
