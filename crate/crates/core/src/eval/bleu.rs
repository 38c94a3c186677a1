use std::collections::HashMap;

use crate::error::{Error, Result};

/// Substitute for a zero clipped n-gram count.
pub const SMOOTHING_EPS: f64 = 1e-9;

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Sufficient statistics of corpus BLEU-4. Adding the statistics of two
/// corpora gives the statistics of their union.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BleuStats {
    pub matches: [usize; 4],
    pub totals: [usize; 4],
    pub cand_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn add(&mut self, other: &BleuStats) {
        for n in 0..4 {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.cand_len += other.cand_len;
        self.ref_len += other.ref_len;
    }

    /// Geometric mean of the modified precisions times the brevity penalty.
    /// A zero clipped count becomes `SMOOTHING_EPS / total`; an order with
    /// no candidate n-grams at all (every candidate shorter than n) counts as
    /// precision 1, so a short sentence still matches itself with score 1.
    pub fn score(&self) -> f64 {
        if self.cand_len == 0 {
            return 0.0;
        }
        let log_p: f64 = (0..4)
            .map(|n| {
                if self.totals[n] == 0 {
                    return 0.0;
                }
                let num = if self.matches[n] == 0 { SMOOTHING_EPS } else { self.matches[n] as f64 };
                (num / self.totals[n] as f64).ln()
            })
            .sum::<f64>()
            / 4.0;
        let (c, r) = (self.cand_len as f64, self.ref_len as f64);
        let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        bp * log_p.exp()
    }
}

/// Statistics of one candidate: clipped n-gram matches against the maximum
/// count over references, and the closest reference length (shorter on ties).
pub fn sentence_stats(cand: &[String], refs: &[Vec<String>]) -> BleuStats {
    let mut s = BleuStats { cand_len: cand.len(), ..Default::default() };
    for n in 1..=4 {
        let c = ngrams(cand, n);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in refs {
            for (g, k) in ngrams(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(k);
            }
        }
        s.totals[n - 1] = c.values().sum();
        s.matches[n - 1] = c.iter().map(|(g, k)| (*k).min(max_ref.get(g).copied().unwrap_or(0))).sum();
    }
    s.ref_len = refs.iter().map(|r| r.len()).min_by_key(|&l| (l.abs_diff(cand.len()), l)).unwrap_or(0);
    s
}

/// Corpus-level BLEU-4 with multiple references per candidate.
pub fn corpus_bleu(cands: &[Vec<String>], refs: &[Vec<Vec<String>>]) -> Result<f64> {
    if cands.is_empty() {
        return Err(Error::Metrics("BLEU over an empty candidate list".into()));
    }
    if cands.len() != refs.len() {
        return Err(Error::Metrics(format!("{} candidates but {} reference sets", cands.len(), refs.len())));
    }
    let mut total = BleuStats::default();
    for (c, r) in cands.iter().zip(refs) {
        if r.is_empty() {
            return Err(Error::Metrics("candidate without references".into()));
        }
        total.add(&sentence_stats(c, r));
    }
    Ok(total.score())
}
