//! Run directories: plan a seeded run, execute it, and re-execute it from its manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::dataset::{corpus_hash, DelexExample, Domain};
use crate::corpus::scenario::{from_manifest, select, Pair, Scenario, ScenarioKind, ScenarioSpec, SplitManifest};
use crate::corpus::vocab::Vocabulary;
use crate::error::{Error, Result};
use crate::eval::report::RESULTS_HEADER;
use crate::eval::{evaluate_records, generate_records, write_generations, Scores};
use crate::model::config::ModelKind;
use crate::model::Model;
use crate::training::config::TrainConfig;
use crate::training::trainer::{encode_pairs, MetricsLog, StepRecord, TrainOutcome, Trainer};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const VOCAB_FILE: &str = "vocab.json";
pub const RESULTS_FILE: &str = "results.csv";
pub const GENERATIONS_FILE: &str = "generations.jsonl";

/// Everything needed to re-execute a run bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model: ModelKind,
    pub scenario: ScenarioSpec,
    pub split: SplitManifest,
    /// Initialisation and noise seed (the split has its own seed).
    pub seed: u64,
    pub data: PathBuf,
    pub corpus_hash: String,
    pub config: TrainConfig,
}

impl RunManifest {
    /// `<domain>/<scenario>/<model>/seed-<seed>` under an output root.
    pub fn run_dir(&self, root: &Path) -> PathBuf {
        root.join(&self.scenario.target_domain).join(self.scenario.name()).join(self.model.name()).join(format!("seed-{}", self.seed))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    fn domains(&self) -> Vec<String> {
        let mut d = vec![self.scenario.target_domain.clone()];
        d.extend(self.scenario.source_domains.iter().cloned());
        d
    }
}

/// Loads the target domain and any source domains named by the scenario.
pub fn load_domains(data: &Path, spec: &ScenarioSpec) -> Result<(Domain, Vec<Domain>)> {
    let target = Domain::load(data, &spec.target_domain)?;
    let sources = spec.source_domains.iter().map(|s| Domain::load(data, s)).collect::<Result<Vec<_>>>()?;
    Ok((target, sources))
}

/// One manifest per configured seed, all sharing the scenario split.
pub fn plan_runs(kind: ModelKind, spec: &ScenarioSpec, config: &TrainConfig, data: &Path) -> Result<Vec<RunManifest>> {
    config.validate()?;
    let (target, sources) = load_domains(data, spec)?;
    let mut split = select(spec, target.train.len())?;
    for s in &sources {
        split.source_sizes.push((s.name.clone(), s.train.len()));
    }
    let mut domains = vec![spec.target_domain.clone()];
    domains.extend(spec.source_domains.iter().cloned());
    let hash = corpus_hash(data, &domains)?;
    Ok(config
        .seeds
        .iter()
        .map(|&seed| RunManifest {
            model: kind,
            scenario: spec.clone(),
            split: split.clone(),
            seed,
            data: data.to_path_buf(),
            corpus_hash: hash.clone(),
            config: config.clone(),
        })
        .collect())
}

/// Vocabulary over everything the run may train on.
pub fn scenario_vocab(s: &Scenario) -> Vocabulary {
    let labeled = s.train.iter().chain(&s.finetune);
    Vocabulary::build(labeled.clone().map(|p| p.tokens.as_slice()).chain(s.unlabeled.iter().map(|u| u.as_slice())), labeled.map(|p| &p.da))
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: Model,
    pub log: MetricsLog,
    pub steps: Vec<StepRecord>,
    pub train: TrainOutcome,
    pub finetune: Option<TrainOutcome>,
}

/// Continues training a model on target pairs with a fresh optimiser and
/// learning-rate schedule. The pairs must have been prepared with the
/// model's vocabulary.
pub fn fine_tune(
    trainer: &mut Trainer<'_>,
    vocab: &Vocabulary,
    pairs: &[Pair],
    valid: &[DelexExample],
    epochs: u32,
) -> Result<TrainOutcome> {
    trainer.model.vocab.ensure_same(vocab)?;
    let data = encode_pairs(trainer.model, pairs);
    trainer.run("finetune", &data, &[], valid, epochs)
}

/// Trains one model on a scenario (with fine-tuning for adaptation).
/// `pretrain_valid` scores the source stage of an adaptation run; other
/// scenarios validate on the target split.
pub fn train_scenario(
    kind: ModelKind,
    scenario: &Scenario,
    pretrain_valid: &[DelexExample],
    config: &TrainConfig,
    seed: u64,
) -> Result<Trained> {
    let vocab = scenario_vocab(scenario);
    let mut model = Model::new(kind, config.model.clone(), &vocab, seed)?;
    let (log, steps, train, finetune) = {
        let mut trainer = Trainer::new(&mut model, config, seed)?;
        let data = encode_pairs(trainer.model, &scenario.train);
        let unlabeled: Vec<Vec<usize>> = scenario.unlabeled.iter().map(|u| vocab.encode(u)).collect();
        let adapt = scenario.spec.kind == ScenarioKind::Adaptation;
        let valid = if adapt { pretrain_valid } else { &scenario.valid };
        let train = trainer.run("train", &data, &unlabeled, valid, config.max_epochs)?;
        let finetune =
            if adapt { Some(fine_tune(&mut trainer, &vocab, &scenario.finetune, &scenario.valid, config.finetune_epochs)?) } else { None };
        (trainer.log.clone(), trainer.steps.clone(), train, finetune)
    };
    Ok(Trained { model, log, steps, train, finetune })
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub manifest: RunManifest,
    pub dir: PathBuf,
    pub test: Option<Scores>,
    /// Reason, when training diverged and the run was abandoned.
    pub diverged: Option<String>,
}

/// The per-seed results file: `RESULTS_HEADER` and one line.
pub fn results_csv(manifest: &RunManifest, test: &Scores) -> String {
    format!(
        "{RESULTS_HEADER}\n{},{},{},{},{},{}\n",
        manifest.scenario.target_domain,
        manifest.scenario.name(),
        manifest.model.name(),
        manifest.seed,
        test.bleu,
        test.err
    )
}

/// A finished run reopened from its directory.
#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub model: Model,
    pub scenario: Scenario,
}

/// Reads the manifest, vocabulary and checkpoint of a run directory and
/// rebuilds its scenario from the corpus.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    if !dir.join(MANIFEST_FILE).is_file() {
        return Err(Error::Config(format!("{} is not a run directory (no {MANIFEST_FILE})", dir.display())));
    }
    let manifest = RunManifest::load(&dir.join(MANIFEST_FILE))?;
    let (target, sources) = load_domains(&manifest.data, &manifest.scenario)?;
    if corpus_hash(&manifest.data, &manifest.domains())? != manifest.corpus_hash {
        log::warn!("corpus under {} changed since {} was trained", manifest.data.display(), dir.display());
    }
    let scenario = from_manifest(&manifest.scenario, manifest.split.clone(), &target, &sources)?;
    let vocab = Vocabulary::load(dir.join(VOCAB_FILE))?;
    let mut model = Model::new(manifest.model, manifest.config.model.clone(), &vocab, manifest.seed)?;
    model.load_params(dir.join(CHECKPOINT_FILE))?;
    Ok(LoadedRun { manifest, model, scenario })
}

/// Executes a manifest into `dir`: checkpoint, vocabulary, metrics log,
/// test generations and per-seed results. A diverged run is recorded in
/// `diverged.txt` and reported rather than returned as an error.
pub fn execute(manifest: &RunManifest, dir: &Path) -> Result<RunResult> {
    manifest.config.validate()?;
    let (target, sources) = load_domains(&manifest.data, &manifest.scenario)?;
    let hash = corpus_hash(&manifest.data, &manifest.domains())?;
    if hash != manifest.corpus_hash {
        return Err(Error::Config(format!("corpus under {} changed since the manifest was written", manifest.data.display())));
    }
    let scenario = from_manifest(&manifest.scenario, manifest.split.clone(), &target, &sources)?;
    let pretrain_valid: Vec<DelexExample> = sources.iter().flat_map(|s| s.valid.iter().cloned()).collect();
    std::fs::create_dir_all(dir)?;
    manifest.save(&dir.join(MANIFEST_FILE))?;
    let trained = match train_scenario(manifest.model, &scenario, &pretrain_valid, &manifest.config, manifest.seed) {
        Ok(t) => t,
        Err(e @ Error::Diverged { .. }) => {
            log::error!("run {} abandoned: {e}", dir.display());
            std::fs::write(dir.join("diverged.txt"), format!("{e}\n"))?;
            return Ok(RunResult { manifest: manifest.clone(), dir: dir.to_path_buf(), test: None, diverged: Some(e.to_string()) });
        }
        Err(e) => return Err(e),
    };
    trained.log.write(&dir.join(METRICS_FILE))?;
    trained.model.save(dir.join(CHECKPOINT_FILE))?;
    trained.model.vocab.save(dir.join(VOCAB_FILE))?;
    let records = generate_records(&trained.model, &scenario.test, 1)?;
    write_generations(&dir.join(GENERATIONS_FILE), &records)?;
    let test = evaluate_records(&records, &scenario.test, &manifest.config.keywords)?;
    std::fs::write(dir.join(RESULTS_FILE), results_csv(manifest, &test))?;
    Ok(RunResult { manifest: manifest.clone(), dir: dir.to_path_buf(), test: Some(test), diverged: None })
}
