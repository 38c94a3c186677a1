use std::path::Path;

use dualnlg_tensor::LrSchedule;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::SlotKeywords;
use crate::model::config::ModelConfig;
use crate::training::anneal::AnnealSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrConfig {
    pub initial: f64,
    pub decay: f64,
    pub hold_epochs: u32,
}

impl Default for LrConfig {
    fn default() -> Self {
        let s = LrSchedule::default();
        Self { initial: s.initial, decay: s.decay, hold_epochs: s.hold_epochs }
    }
}

impl LrConfig {
    pub fn schedule(&self) -> LrSchedule {
        LrSchedule { initial: self.initial, decay: self.decay, hold_epochs: self.hold_epochs }
    }
}

/// Everything a run needs besides the data, model kind and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelConfig,
    /// Monte-Carlo samples of the posterior per example.
    pub mc_samples: usize,
    pub batch_size: usize,
    pub max_epochs: u32,
    /// Epochs without a validation BLEU gain before stopping.
    pub patience: u32,
    pub seeds: Vec<u64>,
    pub lr: LrConfig,
    pub clip_norm: f64,
    pub anneal: AnnealSchedule,
    /// Epoch budget of the fine-tuning stage (adaptation).
    pub finetune_epochs: u32,
    /// Validation examples decoded per epoch (all when unset).
    pub valid_limit: Option<usize>,
    /// Beam width for per-epoch validation (the model's width when unset).
    pub valid_beam: Option<usize>,
    /// Swap-corrupt the autoencoder input.
    pub denoise: bool,
    /// Surface keywords for non-lexical slots in the slot error rate.
    pub keywords: SlotKeywords,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            mc_samples: 1,
            batch_size: 32,
            max_epochs: 30,
            patience: 5,
            seeds: vec![1, 2, 3, 4, 5],
            lr: LrConfig::default(),
            clip_norm: 5.0,
            anneal: AnnealSchedule::default(),
            finetune_epochs: 30,
            valid_limit: None,
            valid_beam: None,
            denoise: true,
            keywords: SlotKeywords::new(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.mc_samples < 1 {
            return bad("mc_samples must be at least 1");
        }
        if self.patience < 1 {
            return bad("patience must be at least 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if !(self.clip_norm > 0.0) {
            return bad("clip_norm must be positive");
        }
        if !(self.lr.initial > 0.0) || !(self.lr.decay > 0.0) {
            return bad("learning rate and decay must be positive");
        }
        if self.valid_beam == Some(0) || self.valid_limit == Some(0) {
            return bad("valid_beam and valid_limit must be positive when set");
        }
        Ok(())
    }

    /// Reads TOML, or JSON when the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
