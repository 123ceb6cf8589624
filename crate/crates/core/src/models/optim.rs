//! First-order optimizers.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};

/// AdamW with decoupled weight decay and bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamWState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamWState {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Self {
        self.weight_decay = wd;
        self
    }

    /// One in-place update of `theta`.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<()> {
        check_dim(self.m.len(), theta.len())?;
        check_dim(theta.len(), grad.len())?;
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let decay = 1.0 - self.lr * self.weight_decay;
        for i in 0..theta.len() {
            let g = grad[i];
            theta[i] *= decay;
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let denom = (self.v[i] / bc2).sqrt() + self.eps;
            theta[i] -= self.lr * (self.m[i] / bc1) / denom;
        }
        Ok(())
    }
}

/// Functional form: returns the updated parameters.
pub fn adamw_step(state: &mut AdamWState, theta: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
    let mut out = theta.to_vec();
    state.step(&mut out, grad)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adamw,
    /// Plain gradient descent `θ ← θ − η(∇ + wd·θ)`.
    Sgd,
}

/// Optimizer state for either kind.
#[derive(Debug, Clone)]
pub enum Optimizer {
    AdamW(AdamWState),
    Sgd { lr: f64, weight_decay: f64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, len: usize, lr: f64, weight_decay: f64) -> Self {
        match kind {
            OptimizerKind::Adamw => {
                Optimizer::AdamW(AdamWState::new(len, lr).with_weight_decay(weight_decay))
            }
            OptimizerKind::Sgd => Optimizer::Sgd { lr, weight_decay },
        }
    }

    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<()> {
        match self {
            Optimizer::AdamW(s) => s.step(theta, grad),
            Optimizer::Sgd { lr, weight_decay } => {
                check_dim(theta.len(), grad.len())?;
                for (t, g) in theta.iter_mut().zip(grad) {
                    *t -= *lr * (g + *weight_decay * *t);
                }
                Ok(())
            }
        }
    }
}
