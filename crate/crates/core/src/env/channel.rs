use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{CMatrix, CVector, JointAction, SystemConfig};
use crate::error::{Error, Result};

/// Channel state for one realization: `H₁` (BS→RIS, `N×M`) and `h_{k,2}`
/// (RIS→user `k`, length `N`) for every user.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub h1: CMatrix,
    pub h2: Vec<CVector>,
}

impl ChannelSet {
    pub fn new(h1: CMatrix, h2: Vec<CVector>) -> Result<Self> {
        let n = h1.nrows();
        if h2.iter().any(|h| h.len() != n) {
            return Err(Error::Shape(format!(
                "every RIS→user vector must have length N={n}"
            )));
        }
        if h2.is_empty() || h1.ncols() == 0 || n == 0 {
            return Err(Error::Shape("channel set has an empty dimension".into()));
        }
        let finite = h1.iter().chain(h2.iter().flat_map(|h| h.iter())).all(|z| z.is_finite());
        if !finite {
            return Err(Error::Shape("channel entries must be finite".into()));
        }
        Ok(ChannelSet { h1, h2 })
    }

    pub fn antennas(&self) -> usize {
        self.h1.ncols()
    }

    pub fn elements(&self) -> usize {
        self.h1.nrows()
    }

    pub fn users(&self) -> usize {
        self.h2.len()
    }

    pub(crate) fn check_against(&self, cfg: &SystemConfig) -> Result<()> {
        if self.antennas() != cfg.antennas
            || self.elements() != cfg.elements
            || self.users() != cfg.users
        {
            return Err(Error::Shape(format!(
                "channels are (M={}, N={}, K={}) but config is (M={}, N={}, K={})",
                self.antennas(),
                self.elements(),
                self.users(),
                cfg.antennas,
                cfg.elements,
                cfg.users
            )));
        }
        Ok(())
    }
}

fn cn01<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draws i.i.d. `CN(0, 1)` Rayleigh entries. `H₁` is filled column-major,
/// then each `h_{k,2}` in user order.
pub fn generate_channels<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> ChannelSet {
    let h1 = CMatrix::from_fn(cfg.elements, cfg.antennas, |_, _| cn01(rng));
    let h2 = (0..cfg.users)
        .map(|_| CVector::from_fn(cfg.elements, |_, _| cn01(rng)))
        .collect();
    ChannelSet { h1, h2 }
}

/// Composite channel `h̃ = h_{k,2}ᵀ · diag(phases) · H₁`, returned as a
/// length-`M` vector (semantically a row).
pub fn effective_channel(phases: &CVector, h1: &CMatrix, hk2: &CVector) -> Result<CVector> {
    let n = h1.nrows();
    if phases.len() != n || hk2.len() != n {
        return Err(Error::Shape(format!(
            "effective channel needs phases and h_k2 of length {n}, got {} and {}",
            phases.len(),
            hk2.len()
        )));
    }
    let weighted = hk2.component_mul(phases);
    Ok(h1.tr_mul(&weighted))
}

/// Stacks every user's effective channel into a `K×M` matrix.
pub fn effective_channels(phases: &CVector, channels: &ChannelSet) -> Result<CMatrix> {
    let k = channels.users();
    let m = channels.antennas();
    let mut out = CMatrix::zeros(k, m);
    for (row, hk2) in channels.h2.iter().enumerate() {
        let h = effective_channel(phases, &channels.h1, hk2)?;
        out.row_mut(row).tr_copy_from(&h);
    }
    Ok(out)
}

/// `K×K` matrix of `h̃_k · g_n` (row `k`, column `n`).
pub fn gain_matrix(action: &JointAction, channels: &ChannelSet) -> Result<CMatrix> {
    let h_eff = effective_channels(&action.phases, channels)?;
    if action.g.nrows() != channels.antennas() || action.g.ncols() != channels.users() {
        return Err(Error::Shape(format!(
            "beamformer is {}×{}, expected {}×{}",
            action.g.nrows(),
            action.g.ncols(),
            channels.antennas(),
            channels.users()
        )));
    }
    Ok(h_eff * &action.g)
}

/// Per-user SINR from a precomputed gain matrix.
pub fn sinrs(gains: &CMatrix, noise_power: f64) -> Vec<f64> {
    (0..gains.nrows())
        .map(|k| {
            let row = gains.row(k);
            let total: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            let signal = row[k].norm_sqr();
            signal / (total - signal + noise_power)
        })
        .collect()
}

/// SINR of user `k` (0-based).
pub fn sinr(
    action: &JointAction,
    channels: &ChannelSet,
    k: usize,
    noise_power: f64,
) -> Result<f64> {
    if k >= channels.users() {
        return Err(Error::Shape(format!(
            "user index {k} out of range for K={}",
            channels.users()
        )));
    }
    let gains = gain_matrix(action, channels)?;
    let row = gains.row(k);
    let signal = row[k].norm_sqr();
    let interference: f64 = row
        .iter()
        .enumerate()
        .filter(|&(n, _)| n != k)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    Ok(signal / (interference + noise_power))
}

pub fn sum_rate_from_gains(gains: &CMatrix, noise_power: f64) -> f64 {
    sinrs(gains, noise_power)
        .into_iter()
        .map(|rho| (1.0 + rho).log2())
        .sum()
}

/// `Σ_k log₂(1 + ρ_k)`.
pub fn sum_rate(action: &JointAction, channels: &ChannelSet, noise_power: f64) -> Result<f64> {
    let gains = gain_matrix(action, channels)?;
    Ok(sum_rate_from_gains(&gains, noise_power))
}
