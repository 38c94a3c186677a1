use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RESULTS_HEADER: &str = "domain,scenario,model,seed,bleu,err";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedScore {
    pub seed: u64,
    pub bleu: f64,
    pub err: f64,
}

/// One model × scenario × domain cell with its per-seed scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub domain: String,
    pub scenario: String,
    pub model: String,
    pub seeds: Vec<SeedScore>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

impl ReportRow {
    pub fn bleu(&self) -> (f64, f64) {
        mean_std(&self.seeds.iter().map(|s| s.bleu).collect::<Vec<_>>())
    }

    pub fn err(&self) -> (f64, f64) {
        mean_std(&self.seeds.iter().map(|s| s.err).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
}

impl MetricsReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, domain: &str, scenario: &str, model: &str, score: SeedScore) -> Result<()> {
        if !(0.0..=1.0).contains(&score.bleu) || !(score.err >= 0.0) {
            return Err(Error::Metrics(format!("out-of-range scores {score:?}")));
        }
        match self.rows.iter_mut().find(|r| r.domain == domain && r.scenario == scenario && r.model == model) {
            Some(r) => {
                if r.seeds.iter().any(|s| s.seed == score.seed) {
                    return Err(Error::Metrics(format!("seed {} reported twice for {model}/{scenario}/{domain}", score.seed)));
                }
                r.seeds.push(score);
                r.seeds.sort_by_key(|s| s.seed);
            }
            None => {
                self.rows.push(ReportRow { domain: domain.into(), scenario: scenario.into(), model: model.into(), seeds: vec![score] });
                self.rows.sort_by(|a, b| (&a.domain, &a.scenario, &a.model).cmp(&(&b.domain, &b.scenario, &b.model)));
            }
        }
        Ok(())
    }

    pub fn row(&self, domain: &str, scenario: &str, model: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.domain == domain && r.scenario == scenario && r.model == model)
    }

    /// Parses per-seed result lines (`RESULTS_HEADER` layout) into the report.
    pub fn add_results_csv(&mut self, text: &str) -> Result<()> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(RESULTS_HEADER) {
            return Err(Error::Metrics(format!("results file must start with `{RESULTS_HEADER}`")));
        }
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.trim().split(',').collect();
            let bad = || Error::Metrics(format!("results line {}: `{line}`", i + 2));
            if f.len() != 6 {
                return Err(bad());
            }
            let seed = f[3].parse().map_err(|_| bad())?;
            let bleu = f[4].parse().map_err(|_| bad())?;
            let err = f[5].parse().map_err(|_| bad())?;
            self.add(f[0], f[1], f[2], SeedScore { seed, bleu, err })?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("domain,scenario,model,seeds,bleu_mean,bleu_std,err_mean,err_std\n");
        for r in &self.rows {
            let (bm, bs) = r.bleu();
            let (em, es) = r.err();
            let _ = writeln!(s, "{},{},{},{},{bm},{bs},{em},{es}", r.domain, r.scenario, r.model, r.seeds.len());
        }
        s
    }

    /// One row per model, a BLEU and an ERR column per scenario × domain.
    pub fn to_markdown(&self) -> String {
        let cols: BTreeSet<(&str, &str)> = self.rows.iter().map(|r| (r.scenario.as_str(), r.domain.as_str())).collect();
        let mut models: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !models.contains(&r.model.as_str()) {
                models.push(&r.model);
            }
        }
        let mut s = String::from("| Model |");
        for (sc, d) in &cols {
            let _ = write!(s, " {sc} {d} BLEU | {sc} {d} ERR |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|---|".repeat(cols.len()));
        s.push('\n');
        for m in models {
            let _ = write!(s, "| {m} |");
            for (sc, d) in &cols {
                match self.row(d, sc, m) {
                    Some(r) => {
                        let (bm, bs) = r.bleu();
                        let (em, es) = r.err();
                        let _ = write!(s, " {bm:.4} ± {bs:.4} | {em:.2}% ± {es:.2} |");
                    }
                    None => s.push_str(" - | - |"),
                }
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_and_recomputes_mean() {
        let mut r = MetricsReport::new();
        for (seed, b, e) in [(1, 0.5, 10.0), (2, 0.7, 2.0)] {
            r.add("hotel", "scr10", "crossvae", SeedScore { seed, bleu: b, err: e }).unwrap();
        }
        let row = r.row("hotel", "scr10", "crossvae").unwrap();
        let (m, s) = row.bleu();
        assert!((m - 0.6).abs() < 1e-12);
        assert!((s - (0.02f64).sqrt()).abs() < 1e-12);
        assert!(r.add("hotel", "scr10", "crossvae", SeedScore { seed: 1, bleu: 0.1, err: 0.0 }).is_err());
        assert!(r.add("hotel", "scr10", "x", SeedScore { seed: 1, bleu: 1.5, err: 0.0 }).is_err());
        let md = r.to_markdown();
        assert!(md.contains("| crossvae | 0.6000"));
    }

    #[test]
    fn results_csv_roundtrip() {
        let mut r = MetricsReport::new();
        r.add_results_csv(&format!("{RESULTS_HEADER}\nsynthetic,scr10,ralstm,3,0.25,12.5\n")).unwrap();
        assert_eq!(r.rows[0].seeds[0], SeedScore { seed: 3, bleu: 0.25, err: 12.5 });
        assert!(r.add_results_csv("nope\n").is_err());
        assert!(r.add_results_csv(&format!("{RESULTS_HEADER}\na,b,c\n")).is_err());
    }
}
