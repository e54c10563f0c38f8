use crate::error::{Error, Result};

/// Per-feature standardization with exponentially weighted running moments.
#[derive(Clone, Debug, PartialEq)]
pub struct WhitenState {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: u64,
    pub momentum: f64,
    pub epsilon: f64,
}

impl WhitenState {
    /// Starts as the identity map (mean 0, variance 1).
    pub fn new(dim: usize) -> Self {
        WhitenState {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            count: 0,
            momentum: 0.99,
            epsilon: 1e-8,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Standardizes `x`. With `update`, the moments absorb `x` first; the very
    /// first update sets the mean to `x` and the variance to zero.
    pub fn apply(&mut self, x: &[f64], update: bool) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Shape(format!(
                "whitening expects {} features, got {}",
                self.dim(),
                x.len()
            )));
        }
        if update {
            if self.count == 0 {
                self.mean.copy_from_slice(x);
                self.var.fill(0.0);
            } else {
                let alpha = 1.0 - self.momentum;
                for ((m, v), &xi) in self.mean.iter_mut().zip(&mut self.var).zip(x) {
                    let delta = xi - *m;
                    *m += alpha * delta;
                    *v = self.momentum * (*v + alpha * delta * delta);
                }
            }
            self.count += 1;
        }
        Ok(self.transform(x))
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.var))
            .map(|(&xi, (&m, &v))| (xi - m) / (v + self.epsilon).sqrt())
            .collect()
    }
}
