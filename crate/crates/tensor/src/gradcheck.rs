//! Central finite-difference checking of parameter gradients.
//!
//! The numeric side only ever evaluates the forward loss, so it stays
//! independent of the backward implementation it is used to verify.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::Gradients;
use crate::param::{ParamId, ParamStore};

#[derive(Debug, Clone)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst: String,
    pub checked: usize,
}

/// `|a − n| / max(|a|, |n|, 1e-4)`; the floor keeps round-off on
/// near-zero gradients from dominating.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

/// Compares `analytic` against `(f(θ + ε) − f(θ − ε)) / 2ε` on every entry of
/// every parameter, or on `samples_per_param` random entries of each.
pub fn check_gradients(
    store: &mut ParamStore,
    analytic: &Gradients,
    eps: f64,
    samples_per_param: Option<usize>,
    seed: u64,
    mut f: impl FnMut(&ParamStore) -> Result<f64>,
) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<ParamId> = store.iter().map(|(id, _)| id).collect();
    let mut report = GradCheck { max_rel_error: 0.0, worst: String::new(), checked: 0 };
    for id in ids {
        let n = store.value(id).len();
        let picks: Vec<usize> = match samples_per_param {
            Some(k) if k < n => sample(&mut rng, n, k).into_vec(),
            _ => (0..n).collect(),
        };
        let grad = analytic.param(id);
        for j in picks {
            let orig = store.value(id).data()[j];
            store.value_mut(id).data_mut()[j] = orig + eps;
            let up = f(store)?;
            store.value_mut(id).data_mut()[j] = orig - eps;
            let down = f(store)?;
            store.value_mut(id).data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = grad.map_or(0.0, |g| g[j]);
            let rel = relative_error(a, numeric);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = format!("{}[{j}]: analytic {a:e}, numeric {numeric:e}", store.get(id).name);
            }
        }
    }
    Ok(report)
}
