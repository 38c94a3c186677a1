//! Beam search over any step-wise scorer.

use std::cmp::Ordering;

use crate::corpus::vocab::{BOS, EOS, PAD, UNK};
use crate::error::{Error, Result};

/// A left-to-right scorer: feeding a token to a state yields the next state
/// and a log-distribution over the whole vocabulary.
pub trait StepModel {
    type State: Clone;

    fn start(&self) -> Result<Self::State>;

    fn step(&self, state: &Self::State, token: usize) -> Result<(Self::State, Vec<f64>)>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated tokens without the closing EOS.
    pub tokens: Vec<usize>,
    pub logp: f64,
    /// Length-normalised score used for the final ranking.
    pub score: f64,
    /// False for a fallback partial that never emitted EOS.
    pub finished: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub width: usize,
    /// Maximum generated tokens, EOS included.
    pub max_len: usize,
    pub length_penalty: f64,
}

/// `logp / len^alpha`, where `len` counts generated tokens including EOS.
pub fn normalized_score(logp: f64, len: usize, alpha: f64) -> f64 {
    logp / (len.max(1) as f64).powf(alpha)
}

/// Tokens a decoder may emit: everything except PAD, BOS and UNK.
pub fn candidate_tokens(vocab: usize) -> impl Iterator<Item = usize> {
    (0..vocab).filter(|&t| t != PAD && t != BOS && t != UNK)
}

struct Live<S> {
    tokens: Vec<usize>,
    logp: f64,
    state: S,
}

fn by_score(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.score.total_cmp(&a.score).then(b.logp.total_cmp(&a.logp)).then_with(|| a.tokens.cmp(&b.tokens))
}

/// Returns finished hypotheses ranked by normalised score, best first.
///
/// Each step ranks every expansion of every live hypothesis by raw log-prob.
/// The best `width` non-EOS expansions stay live. An EOS expansion is kept
/// as finished when it ranks within the top `width`; for `width > 1` every
/// EOS expansion is also kept while the beam has not pruned any live
/// expansion at that step. On the last allowed step (for `width > 1`) only
/// EOS expansions are considered. The search stops once `width` hypotheses
/// have finished. If none finish, the best partial is returned with a warning.
pub fn beam_search<M: StepModel>(model: &M, cfg: BeamConfig) -> Result<Vec<Hypothesis>> {
    if cfg.width == 0 || cfg.max_len == 0 {
        return Err(Error::Generation("beam width and maximum length must be positive".into()));
    }
    let mut live = vec![Live { tokens: Vec::new(), logp: 0.0, state: model.start()? }];
    let mut finished: Vec<Hypothesis> = Vec::new();
    for step in 1..=cfg.max_len {
        // A single-width beam stays greedy up to the end.
        let last_step = step == cfg.max_len && cfg.width > 1;
        let mut expansions: Vec<(f64, usize, usize)> = Vec::new();
        let mut states = Vec::with_capacity(live.len());
        for (i, hyp) in live.iter().enumerate() {
            let prev = hyp.tokens.last().copied().unwrap_or(BOS);
            let (state, logp) = model.step(&hyp.state, prev)?;
            for t in candidate_tokens(logp.len()) {
                if last_step && t != EOS {
                    continue;
                }
                expansions.push((hyp.logp + logp[t], i, t));
            }
            states.push(state);
        }
        expansions.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let non_eos = expansions.iter().filter(|e| e.2 != EOS).count();
        let exhaustive = cfg.width > 1 && non_eos <= cfg.width;
        let mut next = Vec::new();
        for (rank, &(lp, i, t)) in expansions.iter().enumerate() {
            if t == EOS {
                if rank < cfg.width || exhaustive || last_step {
                    let len = live[i].tokens.len() + 1;
                    let score = normalized_score(lp, len, cfg.length_penalty);
                    finished.push(Hypothesis { tokens: live[i].tokens.clone(), logp: lp, score, finished: true });
                }
            } else if next.len() < cfg.width {
                let mut tokens = live[i].tokens.clone();
                tokens.push(t);
                next.push(Live { tokens, logp: lp, state: states[i].clone() });
            }
        }
        if finished.len() >= cfg.width || next.is_empty() {
            live = next;
            break;
        }
        live = next;
    }
    if finished.is_empty() {
        let mut partial: Vec<Hypothesis> = live
            .into_iter()
            .map(|h| {
                let score = normalized_score(h.logp, h.tokens.len(), cfg.length_penalty);
                Hypothesis { tokens: h.tokens, logp: h.logp, score, finished: false }
            })
            .collect();
        partial.sort_by(by_score);
        partial.truncate(1);
        log::debug!("no hypothesis emitted EOS within {} tokens; returning the best partial", cfg.max_len);
        if partial.is_empty() {
            return Err(Error::Generation("beam search produced no hypothesis".into()));
        }
        return Ok(partial);
    }
    finished.sort_by(by_score);
    Ok(finished)
}

/// Takes the most probable candidate token at every step until EOS.
pub fn greedy_decode<M: StepModel>(model: &M, max_len: usize) -> Result<Hypothesis> {
    let mut state = model.start()?;
    let mut tokens = Vec::new();
    let mut total = 0.0;
    let mut prev = BOS;
    for _ in 0..max_len {
        let (next, logp) = model.step(&state, prev)?;
        let best = candidate_tokens(logp.len())
            .fold(None, |acc: Option<usize>, t| match acc {
                Some(b) if logp[b] >= logp[t] => Some(b),
                _ => Some(t),
            })
            .ok_or_else(|| Error::Generation("vocabulary has no candidate tokens".into()))?;
        total += logp[best];
        if best == EOS {
            return Ok(Hypothesis { score: total, tokens, logp: total, finished: true });
        }
        tokens.push(best);
        state = next;
        prev = best;
    }
    Ok(Hypothesis { score: total, tokens, logp: total, finished: false })
}
