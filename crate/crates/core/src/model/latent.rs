//! Gaussian heads, reparameterisation, KL terms and the shared projection.

use dualnlg_tensor::{Graph, Linear, ParamStore, Tensor, Var};

use crate::error::{Error, Result};

/// Mean and log-variance nodes of a diagonal Gaussian on a graph.
#[derive(Debug, Clone, Copy)]
pub struct GaussianVars {
    pub mu: Var,
    pub logvar: Var,
}

/// `[optional ReLU hidden layer] → (μ, clamp(log σ²))`.
#[derive(Debug, Clone)]
pub struct GaussianHead {
    pub hidden: Option<Linear>,
    pub mu: Linear,
    pub logvar: Linear,
    pub clamp: f64,
}

impl GaussianHead {
    pub fn register(store: &mut ParamStore, name: &str, input: usize, latent: usize, hidden: bool, clamp: f64, seed: u64) -> Result<Self> {
        let (hidden, width) =
            if hidden { (Some(Linear::register(store, &format!("{name}.z"), input, latent, seed)?), latent) } else { (None, input) };
        let mu = Linear::register(store, &format!("{name}.mu"), width, latent, seed)?;
        let logvar = Linear::register(store, &format!("{name}.logvar"), width, latent, seed)?;
        Ok(Self { hidden, mu, logvar, clamp })
    }

    pub fn forward(&self, g: &mut Graph<'_>, input: Var) -> Result<GaussianVars> {
        let h = match &self.hidden {
            Some(l) => {
                let a = l.forward(g, input)?;
                g.relu(a)
            }
            None => input,
        };
        let mu = self.mu.forward(g, h)?;
        let lv = self.logvar.forward(g, h)?;
        let logvar = g.clamp(lv, -self.clamp, self.clamp);
        Ok(GaussianVars { mu, logvar })
    }
}

/// `μ + exp(½ log σ²) ⊙ ε`.
pub fn reparameterize(g: &mut Graph<'_>, q: GaussianVars, eps: Tensor) -> Result<Var> {
    if eps.shape() != g.shape(q.mu) {
        return Err(Error::Tensor(dualnlg_tensor::TensorError::ShapeMismatch {
            op: "reparameterize",
            detail: format!("eps {:?} vs mean {:?}", eps.shape(), g.shape(q.mu)),
        }));
    }
    let e = g.constant(eps);
    let half = g.scale(q.logvar, 0.5);
    let sd = g.exp(half);
    let noise = g.mul(sd, e)?;
    Ok(g.add(q.mu, noise)?)
}

/// `KL(q ‖ p)` summed over dimensions:
/// `½(log σp² − log σq²) + (σq² + (μq − μp)²) / (2σp²) − ½`.
pub fn kl_gaussians(g: &mut Graph<'_>, q: GaussianVars, p: GaussianVars) -> Result<Var> {
    let dlv = g.sub(p.logvar, q.logvar)?;
    let neg_dlv = g.scale(dlv, -1.0);
    let var_ratio = g.exp(neg_dlv);
    let dmu = g.sub(q.mu, p.mu)?;
    let dmu2 = g.mul(dmu, dmu)?;
    let neg_lvp = g.scale(p.logvar, -1.0);
    let inv_vp = g.exp(neg_lvp);
    let mean_term = g.mul(dmu2, inv_vp)?;
    let ratio = g.add(var_ratio, mean_term)?;
    let terms = g.add(dlv, ratio)?;
    let terms = g.add_scalar(terms, -1.0);
    let s = g.sum(terms);
    Ok(g.scale(s, 0.5))
}

/// `KL(q ‖ N(0, I)) = ½ Σ (σ² + μ² − 1 − log σ²)`.
pub fn kl_standard(g: &mut Graph<'_>, q: GaussianVars) -> Result<Var> {
    let v = g.exp(q.logvar);
    let mu2 = g.mul(q.mu, q.mu)?;
    let a = g.add(v, mu2)?;
    let b = g.sub(a, q.logvar)?;
    let b = g.add_scalar(b, -1.0);
    let s = g.sum(b);
    Ok(g.scale(s, 0.5))
}

/// `h_e = ReLU(W_e x + b_e)`; one instance serves every latent path.
#[derive(Debug, Clone)]
pub struct Projection(pub Linear);

impl Projection {
    pub fn register(store: &mut ParamStore, latent: usize, proj: usize, seed: u64) -> Result<Self> {
        Ok(Self(Linear::register(store, "proj", latent, proj, seed)?))
    }

    pub fn forward(&self, g: &mut Graph<'_>, z: Var) -> Result<Var> {
        let a = self.0.forward(g, z)?;
        Ok(g.relu(a))
    }
}

/// Plain-valued diagonal Gaussian, for analysis outside a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl DiagonalGaussian {
    pub fn new(mu: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        if mu.len() != log_var.len() {
            return Err(Error::Config(format!("mean has {} entries, log-variance {}", mu.len(), log_var.len())));
        }
        if mu.iter().chain(&log_var).any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite Gaussian parameters".into()));
        }
        Ok(Self { mu, log_var })
    }

    pub fn standard(dim: usize) -> Self {
        Self { mu: vec![0.0; dim], log_var: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        self.mu.iter().zip(&self.log_var).zip(x).map(|((m, lv), x)| -0.5 * (ln2pi + lv + (x - m).powi(2) / lv.exp())).sum()
    }

    /// Same formula as [`kl_gaussians`], on plain values.
    pub fn kl_divergence(&self, p: &DiagonalGaussian) -> Result<f64> {
        if self.dim() != p.dim() {
            return Err(Error::Config(format!("KL between {} and {} dimensions", self.dim(), p.dim())));
        }
        Ok(self
            .mu
            .iter()
            .zip(&self.log_var)
            .zip(p.mu.iter().zip(&p.log_var))
            .map(|((mq, lq), (mp, lp))| 0.5 * ((lp - lq) + (lq - lp).exp() + (mq - mp).powi(2) * (-lp).exp() - 1.0))
            .sum())
    }
}
