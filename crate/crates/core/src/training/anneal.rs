use serde::{Deserialize, Serialize};

/// Per-step linear schedules for the KL weight (0 → 1) and the autoencoder
/// weight alpha (1 → 0). A fixed value, when set, overrides its ramp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSchedule {
    pub kl_warmup_steps: u64,
    pub alpha_decay_steps: u64,
    pub kl_fixed: Option<f64>,
    pub alpha_fixed: Option<f64>,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { kl_warmup_steps: 10_000, alpha_decay_steps: 10_000, kl_fixed: None, alpha_fixed: None }
    }
}

fn ramp(step: u64, steps: u64) -> f64 {
    if step >= steps {
        1.0
    } else {
        step as f64 / steps as f64
    }
}

impl AnnealSchedule {
    pub fn kl_weight(&self, step: u64) -> f64 {
        self.kl_fixed.unwrap_or_else(|| ramp(step, self.kl_warmup_steps))
    }

    pub fn alpha(&self, step: u64) -> f64 {
        self.alpha_fixed.unwrap_or_else(|| 1.0 - ramp(step, self.alpha_decay_steps))
    }
}
