use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dualnlg::corpus::dataset::Domain;
use dualnlg::corpus::scenario::ScenarioSpec;
use dualnlg::corpus::synth;
use dualnlg::eval::report::MetricsReport;
use dualnlg::eval::{evaluate_records, generate_records, read_generations, write_generations};
use dualnlg::model::config::ModelKind;
use dualnlg::training::run::{load_domains, scenario_vocab, RESULTS_FILE};
use dualnlg::training::{execute, load_run, plan_runs, results_csv, RunManifest, TrainConfig};
use dualnlg::{Error, Result};

/// Dual latent variable generator: data preparation, training, generation and scoring.
#[derive(Debug, Parser)]
#[command(name = "dualnlg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corpus in the JSON-lines format.
    Synth(SynthArgs),
    /// Load and delexicalise a domain and write the scenario split.
    Prepare(PrepareArgs),
    /// Train one model on a scenario for each seed.
    Train(TrainArgs),
    /// Decode the evaluation split of a trained run into a generation file.
    Generate(GenerateArgs),
    /// Score a generation file, or a run's checkpoint directly.
    Evaluate(EvaluateArgs),
    /// Aggregate per-seed results into Markdown and CSV tables.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    data: PathBuf,
    /// One of synthetic, restaurant, hotel, tv, laptop.
    #[arg(long)]
    domain: String,
    #[arg(long, default_value_t = 2000)]
    examples: usize,
    #[arg(long, default_value_t = 2)]
    refs: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long)]
    data: PathBuf,
    /// Target domain.
    #[arg(long)]
    domain: String,
    /// scrN, adaptN or semi-UN-LM.
    #[arg(long)]
    scenario: String,
    /// Comma-separated source domains (adaptation only).
    #[arg(long, value_delimiter = ',')]
    source_domains: Vec<String>,
    /// Seed of the labeled/unlabeled selection.
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
}

impl ScenarioArgs {
    fn spec(&self) -> Result<ScenarioSpec> {
        ScenarioSpec::parse(&self.scenario, &self.domain, &self.source_domains, self.split_seed)
    }
}

#[derive(Debug, Args)]
struct PrepareArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    Ralstm,
    RVnlg,
    CVnlg,
    Dualvae,
    Crossvae,
}

impl From<Kind> for ModelKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Ralstm => ModelKind::Ralstm,
            Kind::RVnlg => ModelKind::RVnlg,
            Kind::CVnlg => ModelKind::CVnlg,
            Kind::Dualvae => ModelKind::DualVae,
            Kind::Crossvae => ModelKind::CrossVae,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, required_unless_present = "manifest")]
    data: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    domain: Option<String>,
    #[arg(long, required_unless_present = "manifest")]
    scenario: Option<String>,
    #[arg(long, value_delimiter = ',')]
    source_domains: Vec<String>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long, value_enum, required_unless_present = "manifest")]
    model: Option<Kind>,
    /// Run seeds 1..=N.
    #[arg(long, conflicts_with = "seed")]
    seeds: Option<u64>,
    /// Run a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML or JSON training configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-execute a stored run manifest instead of planning new runs.
    #[arg(long, conflicts_with_all = ["data", "domain", "scenario", "model", "seeds", "seed", "config"])]
    manifest: Option<PathBuf>,
    /// Root of the run directories.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// A run directory written by `train`.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Hypotheses kept per act.
    #[arg(long, default_value_t = 1)]
    top_k: usize,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    run: PathBuf,
    /// Generation file to score; without it the checkpoint is decoded.
    #[arg(long)]
    generations: Option<PathBuf>,
    /// Write the results here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Directories searched recursively for per-seed results files.
    #[arg(long, required = true, num_args = 1..)]
    runs: Vec<PathBuf>,
    /// Directory for report.md and report.csv; the Markdown is printed when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn synth_cmd(a: &SynthArgs) -> Result<()> {
    synth::write_domain(&a.data, &a.domain, a.examples, a.refs, a.seed)?;
    println!("wrote {} examples to {}", a.examples, a.data.join(&a.domain).display());
    Ok(())
}

fn prepare_cmd(a: &PrepareArgs) -> Result<()> {
    let spec = a.scenario.spec()?;
    let (target, sources) = load_domains(&a.scenario.data, &spec)?;
    let scenario = dualnlg::corpus::make_scenario(&spec, &target, &sources)?;
    let dir = a.out.join(&spec.target_domain).join(spec.name());
    std::fs::create_dir_all(&dir)?;
    let split = serde_json::json!({ "spec": spec, "split": scenario.manifest });
    std::fs::write(dir.join("split.json"), serde_json::to_string_pretty(&split)? + "\n")?;
    scenario_vocab(&scenario).save(dir.join("vocab.json"))?;
    let mut lint: Vec<String> = target.lint.clone();
    lint.extend(sources.iter().flat_map(|d: &Domain| d.lint.iter().cloned()));
    std::fs::write(dir.join("lint.txt"), lint.iter().map(|l| format!("{l}\n")).collect::<String>())?;
    if !lint.is_empty() {
        log::warn!("{} delexicalisation warnings, see {}", lint.len(), dir.join("lint.txt").display());
    }
    println!(
        "{}: {} train pairs, {} fine-tune pairs, {} utterance-only, {} valid, {} test -> {}",
        spec.name(),
        scenario.train.len(),
        scenario.finetune.len(),
        scenario.unlabeled.len(),
        scenario.valid.len(),
        scenario.test.len(),
        dir.display()
    );
    Ok(())
}

fn train_cmd(a: &TrainArgs) -> Result<()> {
    let manifests = if let Some(m) = &a.manifest {
        vec![RunManifest::load(m)?]
    } else {
        let (Some(data), Some(domain), Some(scenario)) = (&a.data, &a.domain, &a.scenario) else {
            unreachable!("clap requires the scenario flags without --manifest")
        };
        let spec = ScenarioSpec::parse(scenario, domain, &a.source_domains, a.split_seed)?;
        let mut config = match &a.config {
            Some(p) => TrainConfig::load(p)?,
            None => TrainConfig::default(),
        };
        if let Some(n) = a.seeds {
            config.seeds = (1..=n).collect();
        }
        if let Some(s) = a.seed {
            config.seeds = vec![s];
        }
        let kind = a.model.expect("clap requires --model").into();
        plan_runs(kind, &spec, &config, data)?
    };
    let mut failed = 0;
    for m in &manifests {
        let dir = m.run_dir(&a.out);
        log::info!("training {} on {} {} seed {}", m.model, m.scenario.target_domain, m.scenario.name(), m.seed);
        let r = execute(m, &dir)?;
        match (&r.test, &r.diverged) {
            (Some(t), _) => println!("{}: BLEU {:.4} ERR {:.2}%", dir.display(), t.bleu, t.err),
            (None, Some(why)) => {
                failed += 1;
                println!("{}: diverged ({why})", dir.display());
            }
            (None, None) => unreachable!("a run either scores or diverges"),
        }
    }
    if failed == manifests.len() {
        return Err(Error::Generation(format!("all {failed} runs diverged")));
    }
    Ok(())
}

fn generate_cmd(a: &GenerateArgs) -> Result<()> {
    let run = load_run(&a.run)?;
    let records = generate_records(&run.model, &run.scenario.test, a.top_k)?;
    write_generations(&a.out, &records)?;
    println!("wrote {} generations to {}", records.len(), a.out.display());
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let run = load_run(&a.run)?;
    let records = match &a.generations {
        Some(p) => read_generations(p)?,
        None => generate_records(&run.model, &run.scenario.test, 1)?,
    };
    let scores = evaluate_records(&records, &run.scenario.test, &run.manifest.config.keywords)?;
    let text = results_csv(&run.manifest, &scores);
    match &a.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn collect_results(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<Vec<_>>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_results(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == RESULTS_FILE) {
            out.push(p);
        }
    }
    Ok(())
}

fn report_cmd(a: &ReportArgs) -> Result<()> {
    let mut files = Vec::new();
    for d in &a.runs {
        collect_results(d, &mut files)?;
    }
    if files.is_empty() {
        return Err(Error::Metrics("no results files found".into()));
    }
    let mut report = MetricsReport::new();
    for f in &files {
        report.add_results_csv(&std::fs::read_to_string(f)?)?;
    }
    let md = report.to_markdown();
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("report.md"), &md)?;
            std::fs::write(dir.join("report.csv"), report.to_csv())?;
            println!("{} results files aggregated into {}", files.len(), dir.display());
        }
        None => print!("{md}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => synth_cmd(a),
        Command::Prepare(a) => prepare_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Generate(a) => generate_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Report(a) => report_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
