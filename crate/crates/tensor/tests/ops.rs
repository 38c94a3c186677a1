use dualnlg_tensor::gradcheck::check_gradients;
use dualnlg_tensor::init::uniform;
use dualnlg_tensor::{dropout, lstm_step, Graph, LstmCell, ParamId, ParamStore, Result, Tensor, Var};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rand_tensor(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    uniform(shape, 1.0, rng)
}

/// Builds a store from shapes, runs `build` once for analytic gradients and
/// then through the finite-difference oracle; returns the max relative error.
fn fd_check(shapes: &[&[usize]], seed: u64, build: impl Fn(&mut Graph<'_>, &[Var], &[ParamId]) -> Result<Var>) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let ids: Vec<ParamId> = shapes.iter().enumerate().map(|(i, s)| store.add(format!("p{i}"), rand_tensor(s, &mut rng)).unwrap()).collect();
    let eval = |store: &ParamStore, want_grads: bool| {
        let mut g = Graph::new(store);
        let vars: Vec<Var> = ids.iter().map(|id| g.param(*id)).collect();
        let out = build(&mut g, &vars, &ids)?;
        let loss = if g.shape(out).is_empty() {
            out
        } else {
            // Random projection so every output entry matters.
            let mut prng = ChaCha8Rng::seed_from_u64(99);
            let w = g.constant(rand_tensor(g.shape(out), &mut prng));
            let p = g.mul(out, w)?;
            g.sum(p)
        };
        let value = g.scalar(loss).unwrap();
        let grads = if want_grads { Some(g.backward(loss)?) } else { None };
        Ok::<_, dualnlg_tensor::TensorError>((value, grads))
    };
    let (_, grads) = eval(&store, true).unwrap();
    let grads = grads.unwrap();
    let report = check_gradients(&mut store, &grads, 1e-5, None, seed, |s| Ok(eval(s, false)?.0)).unwrap();
    report.max_rel_error
}

const TOL: f64 = 1e-4;

#[test]
fn elementwise_gradients() {
    let e = fd_check(&[&[5], &[5]], 1, |g, v, _| {
        let a = g.add(v[0], v[1])?;
        let s = g.sub(a, v[1])?;
        let m = g.mul(s, v[1])?;
        let sc = g.scale(m, -1.7);
        let t = g.add_scalar(sc, 0.3);
        let sg = g.sigmoid(t);
        let th = g.tanh(v[0]);
        let ex = g.exp(th);
        let r = g.relu(v[1]);
        let c = g.clamp(v[0], -0.5, 0.5);
        let x = g.add(sg, ex)?;
        let y = g.add(r, c)?;
        g.mul(x, y)
    });
    assert!(e < TOL, "max rel error {e}");
}

#[test]
fn matvec_and_matmul_gradients() {
    let e = fd_check(&[&[4, 3], &[3]], 2, |g, v, _| g.matvec(v[0], v[1]));
    assert!(e < TOL, "matvec {e}");
    let e = fd_check(&[&[2, 3], &[3, 4]], 3, |g, v, _| g.matmul(v[0], v[1]));
    assert!(e < TOL, "matmul {e}");
    let e = fd_check(&[&[2, 3], &[5, 3], &[5]], 4, |g, v, _| {
        let m = g.matmul_nt(v[0], v[1])?;
        g.add_row(m, v[2])
    });
    assert!(e < TOL, "matmul_nt {e}");
}

#[test]
fn structural_gradients() {
    let e = fd_check(&[&[3], &[2], &[6, 2]], 5, |g, v, _| {
        let c = g.concat(&[v[0], v[1]])?;
        let s = g.slice(c, 1, 3)?;
        let st = g.stack(&[s, s])?;
        let r = g.reshape(st, &[6])?;
        let gat = g.gather(v[2], &[0, 3, 3, 5], None)?;
        let gr = g.reshape(gat, &[8])?;
        let a = g.sum(r);
        let b = g.sum(gr);
        let ab = g.mul(a, b)?;
        Ok(ab)
    });
    assert!(e < TOL, "{e}");
}

#[test]
fn gather_padding_row_receives_no_gradient() {
    let mut store = ParamStore::new();
    let t = store.add("emb", Tensor::full(&[3, 2], 1.0)).unwrap();
    let mut g = Graph::new(&store);
    let tv = g.param(t);
    let rows = g.gather(tv, &[0, 1, 0], Some(0)).unwrap();
    let loss = g.sum(rows);
    let grads = g.backward(loss).unwrap();
    assert_eq!(grads.param(t).unwrap(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
}

#[test]
fn softmax_and_nll_gradients() {
    let e = fd_check(&[&[3, 4]], 6, |g, v, _| {
        let lp = g.log_softmax(v[0]);
        g.nll(lp, &[1, 0, 3])
    });
    assert!(e < TOL, "{e}");
    let e = fd_check(&[&[6]], 7, |g, v, _| {
        let lp = g.log_softmax(v[0]);
        g.nll(lp, &[4])
    });
    assert!(e < TOL, "{e}");
}

#[test]
fn convolution_gradients() {
    let e = fd_check(&[&[9, 3], &[4, 3, 3]], 8, |g, v, _| g.conv1d(v[0], v[1], 2));
    assert!(e < TOL, "conv1d {e}");
    let e = fd_check(&[&[4, 4], &[4, 3, 2]], 9, |g, v, _| g.conv_transpose1d(v[0], v[1], 2));
    assert!(e < TOL, "conv_transpose1d {e}");
    let e = fd_check(&[&[6, 2], &[3, 2, 2]], 10, |g, v, _| {
        let y = g.conv1d(v[0], v[1], 1)?;
        g.relu(y);
        g.conv_transpose1d(y, v[1], 1)
    });
    assert!(e < TOL, "conv chain {e}");
}

#[test]
fn lstm_step_gradients() {
    let e = fd_check(&[&[3], &[2], &[2], &[8, 5], &[8]], 11, |g, v, ids| {
        let cell = LstmCell { weight: ids[3], bias: ids[4], input: 3, hidden: 2 };
        let (h, c) = lstm_step(g, v[0], v[1], v[2], &cell, None)?;
        let hc = g.concat(&[h, c])?;
        Ok(hc)
    });
    assert!(e < TOL, "{e}");
}

fn conv_matrix_pair(t: usize, d: usize, h: usize, k: usize, s: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_out = (t - h) / s + 1;
    let x = rand_tensor(&[t, d], &mut rng);
    let f = rand_tensor(&[k, h, d], &mut rng);
    let y = rand_tensor(&[t_out, k], &mut rng);
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let (xv, fv, yv) = (g.constant(x.clone()), g.constant(f), g.constant(y.clone()));
    let cx = g.conv1d(xv, fv, s).unwrap();
    let dy = g.conv_transpose1d(yv, fv, s).unwrap();
    // Brute-force inner products.
    let lhs: f64 = g.data(cx).iter().zip(y.data()).map(|(a, b)| a * b).sum();
    let dy_data = g.data(dy);
    let rhs: f64 = x.data().iter().zip(dy_data.iter().take(x.len())).map(|(a, b)| a * b).sum();
    // deconv can be longer than x when (t − h) % s != 0; the extra rows pair with zeros.
    (lhs, rhs)
}

#[test]
fn adjoint_on_default_geometry() {
    let (l, r) = conv_matrix_pair(17, 4, 5, 3, 2, 12);
    assert!((l - r).abs() < 1e-10, "{l} vs {r}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_deconv_adjointness(t in 1usize..=8, d in 1usize..=8, h in 1usize..=8, k in 1usize..=8, s in 1usize..=4, seed in 0u64..1000) {
        prop_assume!(t >= h);
        let (l, r) = conv_matrix_pair(t, d, h, k, s, seed);
        prop_assert!((l - r).abs() < 1e-10, "{} vs {}", l, r);
    }

    #[test]
    fn conv_shape_law(t in 1usize..=80, h in 1usize..=16, s in 1usize..=4) {
        prop_assume!(t >= h);
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let x = g.constant(Tensor::zeros(&[t, 2]));
        let f = g.constant(Tensor::zeros(&[3, h, 2]));
        let y = g.conv1d(x, f, s).unwrap();
        prop_assert_eq!(g.shape(y)[0], (t - h) / s + 1);
        let back = g.conv_transpose1d(y, f, s).unwrap();
        if (t - h) % s == 0 {
            prop_assert_eq!(g.shape(back)[0], t);
        }
    }
}

fn lstm_fixture(w: Vec<f64>, b: Vec<f64>, input: usize, hidden: usize) -> (ParamStore, LstmCell) {
    let mut store = ParamStore::new();
    let weight = store.add("w", Tensor::new(vec![4 * hidden, input + hidden], w).unwrap()).unwrap();
    let bias = store.add("b", Tensor::vector(b)).unwrap();
    (store, LstmCell { weight, bias, input, hidden })
}

#[test]
fn lstm_zero_weights_give_zero_hidden() {
    let (store, cell) = lstm_fixture(vec![0.0; 4 * 3 * 5], vec![0.0; 12], 2, 3);
    let mut g = Graph::new(&store);
    let x = g.constant(Tensor::vector(vec![5.0, -3.0]));
    let h = g.constant(Tensor::vector(vec![0.2, 0.1, -0.4]));
    let c = g.constant(Tensor::vector(vec![0.0; 3]));
    let (h1, _) = lstm_step(&mut g, x, h, c, &cell, None).unwrap();
    assert_eq!(g.data(h1), &[0.0, 0.0, 0.0]);
}

#[test]
fn lstm_saturated_forget_gate_copies_cell() {
    let (input, hidden) = (2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = rand_tensor(&[4 * hidden, input + hidden], &mut rng).into_data();
    let mut b = vec![0.0; 4 * hidden];
    b[..hidden].iter_mut().for_each(|v| *v = -50.0);
    b[hidden..2 * hidden].iter_mut().for_each(|v| *v = 50.0);
    let (store, cell) = lstm_fixture(w, b, input, hidden);
    let mut g = Graph::new(&store);
    let x = g.constant(Tensor::vector(vec![0.3, -0.8]));
    let h = g.constant(Tensor::vector(vec![0.5, -0.5]));
    let c = g.constant(Tensor::vector(vec![0.7, -1.3]));
    let (_, c1) = lstm_step(&mut g, x, h, c, &cell, None).unwrap();
    for (a, b) in g.data(c1).iter().zip([0.7, -1.3]) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn lstm_single_unit_hand_computation() {
    // Gate rows [i, f, o, g], columns [x, h].
    let w = vec![0.5, -1.0, 0.25, 0.75, -0.5, 1.5, 2.0, -0.25];
    let b = vec![0.1, 0.2, -0.3, 0.05];
    let (store, cell) = lstm_fixture(w, b, 1, 1);
    let (x, h, c) = (0.8, -0.4, 0.6);
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let i = sig(0.5 * x - 1.0 * h + 0.1);
    let f = sig(0.25 * x + 0.75 * h + 0.2);
    let o = sig(-0.5 * x + 1.5 * h - 0.3);
    let gg = (2.0 * x - 0.25 * h + 0.05f64).tanh();
    let c1 = f * c + i * gg;
    let h1 = o * c1.tanh();
    let mut g = Graph::new(&store);
    let xv = g.constant(Tensor::vector(vec![x]));
    let hv = g.constant(Tensor::vector(vec![h]));
    let cv = g.constant(Tensor::vector(vec![c]));
    let (hn, cn) = lstm_step(&mut g, xv, hv, cv, &cell, None).unwrap();
    assert!((g.data(hn)[0] - h1).abs() < 1e-12);
    assert!((g.data(cn)[0] - c1).abs() < 1e-12);
}

#[test]
fn lstm_rejects_bad_shapes() {
    let (store, cell) = lstm_fixture(vec![0.0; 4 * 3 * 5], vec![0.0; 12], 2, 3);
    let mut g = Graph::new(&store);
    let x = g.constant(Tensor::vector(vec![1.0, 2.0, 3.0]));
    let h = g.constant(Tensor::vector(vec![0.0; 3]));
    assert!(lstm_step(&mut g, x, h, h, &cell, None).is_err());
}

#[test]
fn dropout_identity_cases() {
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = g.constant(Tensor::vector(vec![1.0, -2.0, 3.0]));
    let a = dropout(&mut g, x, 1.0, &mut rng, true).unwrap();
    assert_eq!(g.data(a), &[1.0, -2.0, 3.0]);
    let b = dropout(&mut g, x, 0.3, &mut rng, false).unwrap();
    assert_eq!(g.data(b), &[1.0, -2.0, 3.0]);
    assert!(dropout(&mut g, x, 0.0, &mut rng, true).is_err());
    assert!(dropout(&mut g, x, 1.5, &mut rng, true).is_err());
}

#[test]
fn dropout_preserves_mean() {
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let values: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.5).collect();
    let mean_in = values.iter().sum::<f64>() / n as f64;
    let store = ParamStore::new();
    let mut g = Graph::new(&store);
    let x = g.constant(Tensor::vector(values));
    let y = dropout(&mut g, x, 0.7, &mut rng, true).unwrap();
    let mean_out = g.data(y).iter().sum::<f64>() / n as f64;
    assert!((mean_out - mean_in).abs() / mean_in < 0.01, "{mean_out} vs {mean_in}");
}
