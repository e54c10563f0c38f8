use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// System dimensions and link budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antenna count `M`.
    pub antennas: usize,
    /// RIS element count `N`.
    pub elements: usize,
    /// User count `K`.
    pub users: usize,
    /// Transmit power budget in dB relative to the noise power.
    pub pt_db: f64,
    /// Noise power `σ²` (linear).
    pub noise_power: f64,
    pub seed: u64,
}

impl SystemConfig {
    pub fn new(antennas: usize, elements: usize, users: usize, pt_db: f64) -> Result<Self> {
        let cfg = SystemConfig {
            antennas,
            elements,
            users,
            pt_db,
            noise_power: 1.0,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::Config("user count K must be at least 1".into()));
        }
        if self.antennas < self.users {
            return Err(Error::Config(format!(
                "antenna count M={} must be at least the user count K={}",
                self.antennas, self.users
            )));
        }
        if self.elements == 0 {
            return Err(Error::Config("RIS element count N must be at least 1".into()));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::Config(format!(
                "noise power must be positive and finite, got {}",
                self.noise_power
            )));
        }
        if !self.pt_db.is_finite() {
            return Err(Error::Config("pt_db must be finite".into()));
        }
        Ok(())
    }

    /// Linear transmit power budget `P_t`.
    pub fn pt_linear(&self) -> f64 {
        10f64.powf(self.pt_db / 10.0)
    }

    /// Length of the flat action vector, `2MK + 2N`.
    pub fn action_dim(&self) -> usize {
        2 * self.antennas * self.users + 2 * self.elements
    }

    /// Length of the observation vector, `2K + 2K² + 2N + 2MK + 2NM + 2KN`.
    pub fn state_dim(&self) -> usize {
        let (m, n, k) = (self.antennas, self.elements, self.users);
        2 * k + 2 * k * k + 2 * n + 2 * m * k + 2 * n * m + 2 * k * n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_at_m8_n8_k8() {
        let cfg = SystemConfig::new(8, 8, 8, 10.0).unwrap();
        assert_eq!(cfg.action_dim(), 144);
        assert_eq!(cfg.state_dim(), 544);
    }

    #[test]
    fn rejects_fewer_antennas_than_users() {
        assert!(SystemConfig::new(2, 4, 3, 0.0).is_err());
        assert!(SystemConfig::new(2, 0, 1, 0.0).is_err());
        assert!(SystemConfig::new(2, 1, 0, 0.0).is_err());
        let mut cfg = SystemConfig::new(2, 2, 2, 0.0).unwrap();
        cfg.noise_power = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn db_conversion() {
        let cfg = SystemConfig::new(1, 1, 1, 10.0).unwrap();
        assert!((cfg.pt_linear() - 10.0).abs() < 1e-12);
        let cfg = SystemConfig::new(1, 1, 1, 0.0).unwrap();
        assert_eq!(cfg.pt_linear(), 1.0);
    }
}
