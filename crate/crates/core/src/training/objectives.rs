//! Negated variational bounds for every model kind, built on one graph per batch.

use dualnlg_tensor::init::named_rng;
use dualnlg_tensor::{Graph, Tensor, Var};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::da::DialogueAct;
use crate::corpus::noise::{corrupt_swap, swap_count};
use crate::error::{Error, Result};
use crate::model::config::ModelKind;
use crate::model::{kl_gaussians, kl_standard, reparameterize, GaussianVars, Model};

/// Loss composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Teacher-forced NLL only (baseline) or the conditional bound.
    Vnlg,
    CnnDcnn,
    DualVae,
    DaDcnn,
    CrossVae,
}

impl Objective {
    pub fn for_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Ralstm | ModelKind::RVnlg | ModelKind::CVnlg => Objective::Vnlg,
            ModelKind::DualVae => Objective::DualVae,
            ModelKind::CrossVae => Objective::CrossVae,
        }
    }

    fn uses_vnlg(self) -> bool {
        matches!(self, Objective::Vnlg | Objective::DualVae | Objective::CrossVae)
    }

    fn uses_cnn(self) -> bool {
        matches!(self, Objective::CnnDcnn | Objective::DualVae | Objective::CrossVae)
    }

    fn uses_da_dcnn(self) -> bool {
        matches!(self, Objective::DaDcnn | Objective::CrossVae)
    }
}

/// Independent random streams of a run: dropout in the recurrent decoder,
/// the conditional posterior path (its encoder dropout and ε), and the
/// autoencoder path (swaps, its encoder dropout and ε).
#[derive(Debug, Clone)]
pub struct Noise {
    pub dropout: ChaCha8Rng,
    pub latent: ChaCha8Rng,
    pub aux: ChaCha8Rng,
}

impl Noise {
    pub fn new(seed: u64) -> Self {
        Self { dropout: named_rng(seed, "noise.dropout"), latent: named_rng(seed, "noise.latent"), aux: named_rng(seed, "noise.aux") }
    }
}

/// How each batch is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossOptions {
    pub mc_samples: usize,
    /// Apply dropout (training mode).
    pub train: bool,
    /// Swap-corrupt autoencoder inputs.
    pub denoise: bool,
    pub keep_prob: f64,
}

/// Batch-mean values of the terms that make up a loss.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub nll: f64,
    pub kl: f64,
    pub cnn_rec: f64,
    pub cnn_kl: f64,
    pub da_rec: f64,
    pub da_kl: f64,
    /// Autoencoder loss on the utterance-only batch.
    pub unlabeled: f64,
}

impl LossParts {
    pub fn is_finite(&self) -> bool {
        [self.total, self.nll, self.kl, self.cnn_rec, self.cnn_kl, self.da_rec, self.da_kl, self.unlabeled].iter().all(|v| v.is_finite())
    }
}

/// A labeled training example as vocabulary ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub da: DialogueAct,
    pub ids: Vec<usize>,
}

fn normal(rng: &mut ChaCha8Rng, n: usize) -> Tensor {
    Tensor::vector((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
}

fn value(g: &Graph<'_>, v: Var) -> f64 {
    g.data(v)[0]
}

fn drop_of<'a>(rng: &'a mut ChaCha8Rng, opts: &LossOptions) -> Option<(f64, &'a mut ChaCha8Rng)> {
    if opts.train && opts.keep_prob < 1.0 {
        Some((opts.keep_prob, rng))
    } else {
        None
    }
}

struct Terms {
    total: Var,
    parts: LossParts,
}

/// `kl_w · KL(N(μ₂, σ₂²) ‖ N(0, I)) + DCNN reconstruction of the clean ids
/// from the (swap-corrupted) input`.
fn cnn_dcnn_term(
    g: &mut Graph<'_>,
    model: &Model,
    ids: &[usize],
    kl_w: f64,
    noise: &mut Noise,
    opts: &LossOptions,
) -> Result<(Var, f64, f64)> {
    let input = if opts.denoise { corrupt_swap(ids, swap_count(ids.len()), &mut noise.aux) } else { ids.to_vec() };
    let h_u = model.utterance_encoder()?.encode(g, &input, drop_of(&mut noise.aux, opts))?;
    let q = model.aux_head()?.forward(g, h_u)?;
    let eps = normal(&mut noise.aux, model.config.latent);
    let z = reparameterize(g, q, eps)?;
    let h_e = model.projection()?.forward(g, z)?;
    let rec = model.deconv()?.reconstruction_nll(g, h_e, ids)?;
    let kl = kl_standard(g, q)?;
    let wkl = g.scale(kl, kl_w);
    let loss = g.add(rec, wkl)?;
    Ok((loss, value(g, rec), value(g, kl)))
}

#[allow(clippy::too_many_arguments)]
fn example_terms(
    g: &mut Graph<'_>,
    model: &Model,
    ex: &Encoded,
    objective: Objective,
    kl_w: f64,
    alpha: f64,
    noise: &mut Noise,
    opts: &LossOptions,
) -> Result<Terms> {
    if ex.ids.is_empty() {
        return Err(Error::Config("training utterance with no tokens".into()));
    }
    let mut parts = LossParts::default();
    let needs_posterior = objective.uses_da_dcnn() || (objective.uses_vnlg() && model.kind.has_latent());
    let h_d = if objective == Objective::CnnDcnn { None } else { Some(model.encode_da(g, &ex.da)?) };

    let mut qp: Option<(GaussianVars, Var)> = None;
    if needs_posterior {
        let h_d = h_d.expect("act encoding");
        let h_u = model.utterance_encoder()?.encode(g, &ex.ids, drop_of(&mut noise.latent, opts))?;
        let x = g.concat(&[h_d, h_u])?;
        let q = model.posterior_head()?.forward(g, x)?;
        let p = model.prior_head()?.forward(g, h_d)?;
        let kl = kl_gaussians(g, q, p)?;
        parts.kl = value(g, kl);
        qp = Some((q, kl));
    }

    let mut total: Option<Var> = None;
    if objective.uses_vnlg() {
        let h_d = h_d.expect("act encoding");
        let vnlg = match qp {
            Some((q, kl)) if model.kind.has_latent() => {
                let mut nlls = Vec::with_capacity(opts.mc_samples);
                for _ in 0..opts.mc_samples {
                    let eps = normal(&mut noise.latent, model.config.latent);
                    let z = reparameterize(g, q, eps)?;
                    let h_e = model.projection()?.forward(g, z)?;
                    let nll = model.dec.teacher_forced_nll(
                        g,
                        h_d,
                        model.decoder_latent(Some(h_e)),
                        &ex.ids,
                        drop_of(&mut noise.dropout, opts),
                    )?;
                    nlls.push(nll);
                }
                let mut sum = nlls[0];
                for &n in &nlls[1..] {
                    sum = g.add(sum, n)?;
                }
                let nll = g.scale(sum, 1.0 / opts.mc_samples as f64);
                parts.nll = value(g, nll);
                let wkl = g.scale(kl, kl_w);
                g.add(nll, wkl)?
            }
            _ => {
                let nll = model.dec.teacher_forced_nll(g, h_d, None, &ex.ids, drop_of(&mut noise.dropout, opts))?;
                parts.nll = value(g, nll);
                nll
            }
        };
        total = Some(vnlg);
    }

    let mut aux_sum: Option<Var> = None;
    if objective.uses_cnn() {
        let (cnn, rec, kl) = cnn_dcnn_term(g, model, &ex.ids, kl_w, noise, opts)?;
        parts.cnn_rec = rec;
        parts.cnn_kl = kl;
        aux_sum = Some(cnn);
    }
    if objective.uses_da_dcnn() {
        let (q, kl) = qp.expect("posterior");
        let eps = normal(&mut noise.aux, model.config.latent);
        let z = reparameterize(g, q, eps)?;
        let h_e = model.projection()?.forward(g, z)?;
        let rec = model.deconv()?.reconstruction_nll(g, h_e, &ex.ids)?;
        parts.da_rec = value(g, rec);
        parts.da_kl = parts.kl;
        let wkl = g.scale(kl, kl_w);
        let da = g.add(rec, wkl)?;
        aux_sum = Some(match aux_sum {
            Some(c) => g.add(c, da)?,
            None => da,
        });
    }

    let total = match (total, aux_sum) {
        (Some(v), Some(a)) => {
            let wa = g.scale(a, alpha);
            g.add(v, wa)?
        }
        (Some(v), None) => v,
        (None, Some(a)) => a,
        (None, None) => unreachable!("every objective has a term"),
    };
    parts.total = value(g, total);
    Ok(Terms { total, parts })
}

fn mean(g: &mut Graph<'_>, vars: &[Var]) -> Result<Var> {
    let mut sum = vars[0];
    for &v in &vars[1..] {
        sum = g.add(sum, v)?;
    }
    Ok(g.scale(sum, 1.0 / vars.len() as f64))
}

/// Batch-mean loss on `batch` and, when `unlabeled` is non-empty, plus
/// `alpha ·` the batch-mean autoencoder loss on the utterance-only batch.
#[allow(clippy::too_many_arguments)]
pub fn batch_loss(
    g: &mut Graph<'_>,
    model: &Model,
    batch: &[Encoded],
    unlabeled: &[Vec<usize>],
    objective: Objective,
    kl_w: f64,
    alpha: f64,
    noise: &mut Noise,
    opts: &LossOptions,
) -> Result<(Var, LossParts)> {
    if batch.is_empty() {
        return Err(Error::Config("empty training batch".into()));
    }
    if opts.mc_samples == 0 {
        return Err(Error::Config("mc_samples must be at least 1".into()));
    }
    if !unlabeled.is_empty() && !model.kind.has_autoencoder() {
        return Err(Error::Config(format!("{} cannot use utterance-only data", model.kind)));
    }
    let mut totals = Vec::with_capacity(batch.len());
    let mut parts = LossParts::default();
    let n = batch.len() as f64;
    for ex in batch {
        let t = example_terms(g, model, ex, objective, kl_w, alpha, noise, opts)?;
        totals.push(t.total);
        parts.nll += t.parts.nll / n;
        parts.kl += t.parts.kl / n;
        parts.cnn_rec += t.parts.cnn_rec / n;
        parts.cnn_kl += t.parts.cnn_kl / n;
        parts.da_rec += t.parts.da_rec / n;
        parts.da_kl += t.parts.da_kl / n;
    }
    let mut loss = mean(g, &totals)?;
    if !unlabeled.is_empty() {
        let mut us = Vec::with_capacity(unlabeled.len());
        for ids in unlabeled {
            if ids.is_empty() {
                return Err(Error::Config("utterance-only example with no tokens".into()));
            }
            us.push(cnn_dcnn_term(g, model, ids, kl_w, noise, opts)?.0);
        }
        let u = mean(g, &us)?;
        parts.unlabeled = value(g, u);
        let wu = g.scale(u, alpha);
        loss = g.add(loss, wu)?;
    }
    parts.total = value(g, loss);
    Ok((loss, parts))
}
