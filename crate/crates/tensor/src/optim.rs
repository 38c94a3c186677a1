use crate::error::{Result, TensorError};
use crate::param::ParamStore;

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Default for Adam {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: Vec::new(), v: Vec::new() }
    }
}

impl Adam {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of updates applied so far.
    pub fn t(&self) -> u64 {
        self.step
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    /// Nothing is modified if any gradient holds a NaN.
    pub fn step(&mut self, store: &mut ParamStore, lr: f64) -> Result<()> {
        if let Some((_, p)) = store.iter().find(|(_, p)| p.grad.data().iter().any(|g| g.is_nan())) {
            return Err(TensorError::NanGradient(p.name.clone()));
        }
        if self.m.len() != store.len() {
            self.m = store.iter().map(|(_, p)| vec![0.0; p.value.len()]).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((p, m), v) in store.params_mut().iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let grad = p.grad.data();
            let value = p.value.data_mut();
            for j in 0..value.len() {
                let g = grad[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                value[j] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        store.zero_grads();
        Ok(())
    }
}

/// Rescales all gradients so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(store: &mut ParamStore, max_norm: f64) -> f64 {
    let norm = store.grad_norm();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        for p in store.params_mut() {
            p.grad.data_mut().iter_mut().for_each(|g| *g *= s);
        }
    }
    norm
}

/// Constant rate for the first `hold_epochs`, then exponential decay per epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay: f64,
    pub hold_epochs: u32,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self { initial: 0.001, decay: 0.95, hold_epochs: 5 }
    }
}

impl LrSchedule {
    /// Learning rate for a 1-based epoch.
    pub fn rate(&self, epoch: u32) -> Result<f64> {
        if epoch < 1 {
            return Err(TensorError::InvalidArgument("epochs are numbered from 1".into()));
        }
        if epoch <= self.hold_epochs {
            Ok(self.initial)
        } else {
            Ok(self.initial * self.decay.powi((epoch - self.hold_epochs) as i32))
        }
    }
}

pub fn lr_schedule(epoch: u32) -> Result<f64> {
    LrSchedule::default().rate(epoch)
}
