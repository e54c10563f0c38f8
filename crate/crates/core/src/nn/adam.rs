use super::{DenseNet, Gradients};
use crate::error::{Error, Result};

/// Adam with bias correction and a per-step exponentially decaying learning
/// rate `lr(t) = base_lr · (1 − decay)^t`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub base_lr: f64,
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    /// Moments are sized lazily on the first step.
    pub fn new(base_lr: f64, decay: f64) -> Self {
        AdamState {
            base_lr,
            decay,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Vec<f64>], &[Vec<f64>]) {
        (&self.first, &self.second)
    }

    /// Learning rate at step `t`.
    pub fn lr_current(&self, t: u64) -> f64 {
        lr_at(self.base_lr, self.decay, t)
    }

    /// One update over parallel lists of parameter and gradient slices.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len()
            || params.iter().zip(grads).any(|(p, g)| p.len() != g.len())
        {
            return Err(Error::Shape("parameter and gradient layouts differ".into()));
        }
        if self.first.is_empty() {
            self.first = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.second = self.first.clone();
        } else if self.first.len() != grads.len()
            || self.first.iter().zip(grads).any(|(m, g)| m.len() != g.len())
        {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }

        let lr = self.lr_current(self.step);
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    /// Descends `grads` on the network's trainable parameters.
    pub fn apply(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        let g = grads.slices();
        let mut p = net.param_slices_mut();
        self.step(&mut p, &g)
    }
}

pub fn lr_at(base_lr: f64, decay: f64, t: u64) -> f64 {
    base_lr * (1.0 - decay).powf(t as f64)
}
