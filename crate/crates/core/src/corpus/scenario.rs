//! Training scenarios: scratch-N%, adaptation from source domains, and
//! semi-supervised (labeled + utterance-only) splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::da::DialogueAct;
use crate::corpus::dataset::{DelexExample, Domain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Scratch,
    Adaptation,
    Semi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub train_fraction: f64,
    pub source_domains: Vec<String>,
    pub target_domain: String,
    pub unlabeled_fraction: f64,
    pub seed: u64,
}

fn percent(s: &str, whole: &str) -> Result<f64> {
    let n: u32 = s.parse().map_err(|_| Error::Scenario(format!("bad percentage in `{whole}`")))?;
    Ok(f64::from(n) / 100.0)
}

impl ScenarioSpec {
    /// Parses `scrN`, `adaptN` or `semi-UN-LM` (percentages).
    pub fn parse(name: &str, target: &str, sources: &[String], seed: u64) -> Result<Self> {
        let mut spec = Self {
            kind: ScenarioKind::Scratch,
            train_fraction: 1.0,
            source_domains: Vec::new(),
            target_domain: target.to_string(),
            unlabeled_fraction: 0.0,
            seed,
        };
        if let Some(p) = name.strip_prefix("scr") {
            spec.train_fraction = percent(p, name)?;
        } else if let Some(p) = name.strip_prefix("adapt") {
            spec.kind = ScenarioKind::Adaptation;
            spec.train_fraction = percent(p, name)?;
            spec.source_domains = sources.to_vec();
        } else if let Some(rest) = name.strip_prefix("semi-U") {
            let (u, l) = rest.split_once("-L").ok_or_else(|| Error::Scenario(format!("expected semi-U<n>-L<n>, got `{name}`")))?;
            spec.kind = ScenarioKind::Semi;
            spec.unlabeled_fraction = percent(u, name)?;
            spec.train_fraction = percent(l, name)?;
        } else {
            return Err(Error::Scenario(format!("unknown scenario `{name}`")));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> String {
        let pct = |f: f64| (f * 100.0).round() as u32;
        match self.kind {
            ScenarioKind::Scratch => format!("scr{}", pct(self.train_fraction)),
            ScenarioKind::Adaptation => format!("adapt{}", pct(self.train_fraction)),
            ScenarioKind::Semi => format!("semi-U{}-L{}", pct(self.unlabeled_fraction), pct(self.train_fraction)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |f: f64| f > 0.0 && f <= 1.0;
        if !ok(self.train_fraction) {
            return Err(Error::Scenario(format!("train fraction {} outside (0, 1]", self.train_fraction)));
        }
        if self.kind == ScenarioKind::Semi && !ok(self.unlabeled_fraction) {
            return Err(Error::Scenario(format!("unlabeled fraction {} outside (0, 1]", self.unlabeled_fraction)));
        }
        if self.kind == ScenarioKind::Adaptation {
            if self.source_domains.is_empty() {
                return Err(Error::Scenario("adaptation needs at least one source domain".into()));
            }
            if self.source_domains.contains(&self.target_domain) {
                return Err(Error::Scenario("the target domain cannot also be a source".into()));
            }
        }
        Ok(())
    }
}

/// `max(1, round(fraction · n))`.
pub fn fraction_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).max(1)
}

/// Split membership by example index into the target train split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub source_sizes: Vec<(String, usize)>,
}

/// One training pair: an act and one delexicalised reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub da: DialogueAct,
    pub tokens: Vec<String>,
}

pub fn pairs(examples: &[DelexExample]) -> Vec<Pair> {
    examples.iter().flat_map(|ex| ex.refs.iter().map(|u| Pair { da: ex.da.clone(), tokens: u.tokens.clone() })).collect()
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub manifest: SplitManifest,
    /// Main training set: the labeled target subset, or the source union for adaptation.
    pub train: Vec<Pair>,
    /// Target subset used to fine-tune after source training (adaptation only).
    pub finetune: Vec<Pair>,
    /// Utterances whose acts were dropped (semi-supervised only).
    pub unlabeled: Vec<Vec<String>>,
    pub valid: Vec<DelexExample>,
    pub test: Vec<DelexExample>,
}

/// Draws the labeled (and unlabeled) index sets from a seeded shuffle of the
/// target train split.
pub fn select(spec: &ScenarioSpec, n: usize) -> Result<SplitManifest> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Scenario(format!("domain `{}` has an empty train split", spec.target_domain)));
    }
    let k = fraction_count(spec.train_fraction, n);
    let u = if spec.kind == ScenarioKind::Semi { fraction_count(spec.unlabeled_fraction, n) } else { 0 };
    if k + u > n {
        return Err(Error::Scenario(format!("{k} labeled + {u} unlabeled examples requested, only {n} available")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if k < n {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    }
    let mut labeled = order[..k].to_vec();
    let mut unlabeled = order[k..k + u].to_vec();
    labeled.sort_unstable();
    unlabeled.sort_unstable();
    Ok(SplitManifest { labeled, unlabeled, source_sizes: Vec::new() })
}

/// Materialises a scenario from an explicit manifest (as stored with a run).
pub fn from_manifest(spec: &ScenarioSpec, manifest: SplitManifest, target: &Domain, sources: &[Domain]) -> Result<Scenario> {
    if target.name != spec.target_domain {
        return Err(Error::Scenario(format!("target `{}` given for a `{}` scenario", target.name, spec.target_domain)));
    }
    let n = target.train.len();
    if manifest.labeled.iter().chain(&manifest.unlabeled).any(|&i| i >= n) {
        return Err(Error::Scenario("manifest index outside the target train split".into()));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| target.train[i].clone()).collect::<Vec<_>>();
    let labeled = pairs(&pick(&manifest.labeled));
    let unlabeled: Vec<Vec<String>> = pairs(&pick(&manifest.unlabeled)).into_iter().map(|p| p.tokens).collect();
    let (train, finetune) = match spec.kind {
        ScenarioKind::Adaptation => {
            let mut src = Vec::new();
            for name in &spec.source_domains {
                let d = sources.iter().find(|d| &d.name == name).ok_or_else(|| Error::UnknownDomain(name.clone()))?;
                src.extend(pairs(&d.train));
            }
            (src, labeled)
        }
        _ => (labeled, Vec::new()),
    };
    Ok(Scenario { spec: spec.clone(), manifest, train, finetune, unlabeled, valid: target.valid.clone(), test: target.test.clone() })
}

pub fn make_scenario(spec: &ScenarioSpec, target: &Domain, sources: &[Domain]) -> Result<Scenario> {
    let mut manifest = select(spec, target.train.len())?;
    if spec.kind == ScenarioKind::Adaptation {
        for name in &spec.source_domains {
            let d = sources.iter().find(|d| &d.name == name).ok_or_else(|| Error::UnknownDomain(name.clone()))?;
            manifest.source_sizes.push((name.clone(), d.train.len()));
        }
    }
    from_manifest(spec, manifest, target, sources)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in ["scr10", "scr30", "scr100", "semi-U50-L10"] {
            assert_eq!(ScenarioSpec::parse(name, "hotel", &[], 1).unwrap().name(), name);
        }
        let s = ScenarioSpec::parse("adapt10", "hotel", &["restaurant".into()], 1).unwrap();
        assert_eq!(s.name(), "adapt10");
        assert_eq!(s.kind, ScenarioKind::Adaptation);
        assert!(ScenarioSpec::parse("adapt10", "hotel", &[], 1).is_err());
        assert!(ScenarioSpec::parse("adapt10", "hotel", &["hotel".into()], 1).is_err());
        assert!(ScenarioSpec::parse("scr0", "hotel", &[], 1).is_err());
        assert!(ScenarioSpec::parse("scr150", "hotel", &[], 1).is_err());
        assert!(ScenarioSpec::parse("full", "hotel", &[], 1).is_err());
    }

    #[test]
    fn semi_counts_and_disjointness() {
        let spec = ScenarioSpec::parse("semi-U50-L10", "hotel", &[], 3).unwrap();
        let m = select(&spec, 1234).unwrap();
        assert_eq!(m.labeled.len(), 123);
        assert_eq!(m.unlabeled.len(), 617);
        assert!(m.labeled.iter().all(|i| !m.unlabeled.contains(i)));
    }

    #[test]
    fn scratch_full_and_small() {
        let spec = ScenarioSpec::parse("scr100", "hotel", &[], 3).unwrap();
        assert_eq!(select(&spec, 7).unwrap().labeled, (0..7).collect::<Vec<_>>());
        let spec = ScenarioSpec::parse("scr10", "hotel", &[], 3).unwrap();
        assert_eq!(select(&spec, 3).unwrap().labeled.len(), 1);
        assert_eq!(select(&spec, 3).unwrap(), select(&spec, 3).unwrap());
        assert!(select(&spec, 0).is_err());
    }

    #[test]
    fn oversubscribed_semi_is_rejected() {
        let mut spec = ScenarioSpec::parse("semi-U50-L10", "hotel", &[], 3).unwrap();
        spec.unlabeled_fraction = 0.95;
        assert!(select(&spec, 100).is_err());
    }
}
