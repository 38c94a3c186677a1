//! Dense kernels shared by the forward and backward passes.

/// Strided read-only matrix view: element (i, j) lives at `i * rs + j * cs`.
#[derive(Clone, Copy)]
pub(crate) struct View<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl<'a> View<'a> {
    pub fn row_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self { data, rows, cols, rs: cols, cs: 1 }
    }

    pub fn t(self) -> Self {
        Self { data: self.data, rows: self.cols, cols: self.rows, rs: self.cs, cs: self.rs }
    }

    fn check(&self) {
        if self.rows > 0 && self.cols > 0 {
            let last = (self.rows - 1) * self.rs + (self.cols - 1) * self.cs;
            assert!(last < self.data.len(), "matrix view out of bounds");
        }
    }
}

/// `c = beta * c + a · b`, with `c` row-major `[a.rows × b.cols]`.
pub(crate) fn gemm(a: View<'_>, b: View<'_>, c: &mut [f64], beta: f64) {
    assert_eq!(a.cols, b.rows, "gemm inner dimension");
    let (m, k, n) = (a.rows, a.cols, b.cols);
    assert_eq!(c.len(), m * n, "gemm output size");
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    a.check();
    b.check();
    // SAFETY: every index touched by dgemm is bounded by the `check` calls above
    // and the exact `c` length assertion; `c` does not alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.data.as_ptr(),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr(),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Valid 1-D convolution. `input` is `[t × d]`, `filters` is `[k × h × d]`,
/// output `[t_out × k]`.
pub(crate) fn conv1d_forward(input: &[f64], filters: &[f64], d: usize, h: usize, k: usize, stride: usize, t_out: usize) -> Vec<f64> {
    let hd = h * d;
    // Window t starts at row t*stride and spans h contiguous rows.
    let windows = View { data: input, rows: t_out, cols: hd, rs: stride * d, cs: 1 };
    let f_t = View::row_major(filters, k, hd).t();
    let mut out = vec![0.0; t_out * k];
    gemm(windows, f_t, &mut out, 0.0);
    out
}

/// Scatter-adds window rows `cols[t_out × (h·d)]` back into a `[t × d]` buffer.
pub(crate) fn col2im_add(cols: &[f64], out: &mut [f64], d: usize, h: usize, stride: usize, t_out: usize) {
    let hd = h * d;
    for t in 0..t_out {
        let dst = &mut out[t * stride * d..t * stride * d + hd];
        for (o, c) in dst.iter_mut().zip(&cols[t * hd..(t + 1) * hd]) {
            *o += *c;
        }
    }
}

pub(crate) fn matvec(w: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    (0..rows).map(|r| w[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub(crate) fn axpy(dst: &mut [f64], src: &[f64], alpha: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
