use std::fmt::Write as _;
use std::path::Path;

use dualnlg_tensor::init::named_rng;
use dualnlg_tensor::{clip_grad_norm, Adam, Graph};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::corpus::dataset::DelexExample;
use crate::corpus::scenario::Pair;
use crate::error::{Error, Result};
use crate::eval::{generate_top, score, Scores};
use crate::model::Model;
use crate::training::config::TrainConfig;
use crate::training::objectives::{batch_loss, Encoded, LossOptions, LossParts, Noise, Objective};

pub const METRICS_HEADER: &str =
    "stage,row,step,epoch,lr,kl_w,alpha,loss,nll,kl,cnn_rec,cnn_kl,da_rec,da_kl,unlabeled,grad_norm,val_bleu,val_err";

/// Per-step and per-epoch rows of one run, in CSV form.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLog {
    rows: Vec<String>,
}

impl MetricsLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    fn push_step(&mut self, stage: &str, r: &StepRecord) {
        let p = &r.parts;
        let mut s = String::new();
        let _ = write!(
            s,
            "{stage},step,{},{},{},{},{},{},{},{},{},{},{},{},{},{},,",
            r.step, r.epoch, r.lr, r.kl_w, r.alpha, p.total, p.nll, p.kl, p.cnn_rec, p.cnn_kl, p.da_rec, p.da_kl, p.unlabeled, r.grad_norm
        );
        self.rows.push(s);
    }

    fn push_epoch(&mut self, stage: &str, step: u64, epoch: u32, lr: f64, loss: f64, v: &Scores) {
        self.rows.push(format!("{stage},epoch,{step},{epoch},{lr},,,{loss},,,,,,,,,{},{}", v.bleu, v.err));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: u32,
    pub lr: f64,
    pub kl_w: f64,
    pub alpha: f64,
    pub parts: LossParts,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: u32,
    pub lr: f64,
    pub mean_loss: f64,
    pub mean_kl: f64,
    pub valid: Scores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    /// Epoch whose parameters were kept (0 when no epoch ran).
    pub best_epoch: u32,
    pub best: Option<Scores>,
    pub epochs: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// Maps pairs to vocabulary ids.
pub fn encode_pairs(model: &Model, pairs: &[Pair]) -> Vec<Encoded> {
    pairs.iter().map(|p| Encoded { da: p.da.clone(), ids: model.vocab.encode(&p.tokens) }).collect()
}

/// Sequential mini-batch training of one model under one seed. The anneal
/// step counter persists across stages; each stage gets a fresh optimiser
/// and learning-rate schedule.
pub struct Trainer<'a> {
    pub model: &'a mut Model,
    pub config: &'a TrainConfig,
    pub objective: Objective,
    pub noise: Noise,
    shuffle: ChaCha8Rng,
    pub step: u64,
    pub log: MetricsLog,
    pub steps: Vec<StepRecord>,
}

impl<'a> Trainer<'a> {
    pub fn new(model: &'a mut Model, config: &'a TrainConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let objective = Objective::for_kind(model.kind);
        Ok(Self {
            model,
            config,
            objective,
            noise: Noise::new(seed),
            shuffle: named_rng(seed, "noise.shuffle"),
            step: 0,
            log: MetricsLog::new(),
            steps: Vec::new(),
        })
    }

    pub fn options(&self, train: bool) -> LossOptions {
        LossOptions { mc_samples: self.config.mc_samples, train, denoise: self.config.denoise, keep_prob: self.model.config.keep_prob }
    }

    /// One optimiser update on a batch.
    pub fn update(&mut self, adam: &mut Adam, batch: &[Encoded], unlabeled: &[Vec<usize>], epoch: u32, lr: f64) -> Result<StepRecord> {
        let kl_w = self.config.anneal.kl_weight(self.step);
        let alpha = self.config.anneal.alpha(self.step);
        let opts = self.options(true);
        let (parts, grads) = {
            let mut g = Graph::new(&self.model.store);
            let (loss, parts) = batch_loss(&mut g, self.model, batch, unlabeled, self.objective, kl_w, alpha, &mut self.noise, &opts)?;
            if !parts.is_finite() {
                return Err(Error::Diverged { epoch, step: self.step, reason: format!("non-finite loss {parts:?}") });
            }
            (parts, g.backward(loss)?)
        };
        let store = &mut self.model.store;
        store.zero_grads();
        store.accumulate(&grads, 1.0);
        let grad_norm = clip_grad_norm(store, self.config.clip_norm);
        if !grad_norm.is_finite() {
            return Err(Error::Diverged { epoch, step: self.step, reason: format!("gradient norm {grad_norm}") });
        }
        adam.step(store, lr).map_err(|e| Error::Diverged { epoch, step: self.step, reason: e.to_string() })?;
        let rec = StepRecord { step: self.step, epoch, lr, kl_w, alpha, parts, grad_norm };
        self.step += 1;
        Ok(rec)
    }

    /// Beam-decodes (a prefix of) the validation set and scores it.
    pub fn validate(&self, valid: &[DelexExample]) -> Result<Scores> {
        let n = self.config.valid_limit.map_or(valid.len(), |l| l.min(valid.len()));
        let part = &valid[..n];
        let das: Vec<_> = part.iter().map(|e| e.da.clone()).collect();
        let gens = generate_top(self.model, &das, self.config.valid_beam)?;
        score(&gens, part, &self.config.keywords)
    }

    /// Epoch loop with early stopping on validation BLEU (ties go to the lower
    /// slot error rate). The best epoch's parameters are restored at the end.
    pub fn run(
        &mut self,
        stage: &str,
        train: &[Encoded],
        unlabeled: &[Vec<usize>],
        valid: &[DelexExample],
        max_epochs: u32,
    ) -> Result<TrainOutcome> {
        if train.is_empty() {
            return Err(Error::Scenario("empty training set".into()));
        }
        if valid.is_empty() && max_epochs > 0 {
            return Err(Error::Scenario("empty validation set".into()));
        }
        let schedule = self.config.lr.schedule();
        let mut adam = Adam::new();
        let bs = self.config.batch_size;
        let n_batches = train.len().div_ceil(bs);
        let ubs = unlabeled.len().div_ceil(n_batches);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut u_order: Vec<usize> = (0..unlabeled.len()).collect();
        let mut best: Option<(Scores, u32, Vec<dualnlg_tensor::Tensor>)> = None;
        let mut epochs = Vec::new();
        let mut since_best = 0;
        let mut stopped_early = false;
        for epoch in 1..=max_epochs {
            let lr = schedule.rate(epoch)?;
            order.shuffle(&mut self.shuffle);
            u_order.shuffle(&mut self.shuffle);
            let (mut loss_sum, mut kl_sum) = (0.0, 0.0);
            for b in 0..n_batches {
                let batch: Vec<Encoded> = order[b * bs..((b + 1) * bs).min(train.len())].iter().map(|&i| train[i].clone()).collect();
                let u_lo = (b * ubs).min(unlabeled.len());
                let u_hi = ((b + 1) * ubs).min(unlabeled.len());
                let ubatch: Vec<Vec<usize>> = u_order[u_lo..u_hi].iter().map(|&i| unlabeled[i].clone()).collect();
                let rec = self.update(&mut adam, &batch, &ubatch, epoch, lr)?;
                loss_sum += rec.parts.total;
                kl_sum += rec.parts.kl;
                self.log.push_step(stage, &rec);
                self.steps.push(rec);
            }
            let v = self.validate(valid)?;
            let mean_loss = loss_sum / n_batches as f64;
            self.log.push_epoch(stage, self.step, epoch, lr, mean_loss, &v);
            log::info!("{stage} epoch {epoch}: loss {mean_loss:.4} valid BLEU {:.4} ERR {:.2}", v.bleu, v.err);
            epochs.push(EpochRecord { epoch, lr, mean_loss, mean_kl: kl_sum / n_batches as f64, valid: v });
            let improved = match &best {
                None => true,
                Some((b, _, _)) => v.bleu > b.bleu || (v.bleu == b.bleu && v.err < b.err),
            };
            if improved {
                best = Some((v, epoch, self.model.store.snapshot()));
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= self.config.patience {
                    stopped_early = true;
                    break;
                }
            }
        }
        let (best_scores, best_epoch) = match best {
            Some((s, e, snap)) => {
                self.model.store.restore(&snap)?;
                (Some(s), e)
            }
            None => (None, 0),
        };
        Ok(TrainOutcome { best_epoch, best: best_scores, epochs, stopped_early })
    }
}
