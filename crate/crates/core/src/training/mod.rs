//! Objectives, annealing, the epoch loop, and run orchestration.

pub mod anneal;
pub mod config;
pub mod objectives;
pub mod run;
pub mod trainer;

pub use anneal::AnnealSchedule;
pub use config::{LrConfig, TrainConfig};
pub use objectives::{batch_loss, Encoded, LossOptions, LossParts, Noise, Objective};
pub use run::{execute, fine_tune, load_run, plan_runs, results_csv, train_scenario, LoadedRun, RunManifest, RunResult};
pub use trainer::{encode_pairs, EpochRecord, MetricsLog, StepRecord, TrainOutcome, Trainer};
