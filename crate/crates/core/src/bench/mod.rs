//! Classical baselines and ground-truth oracles for the joint design.
//!
//! - [`wmmse_beamforming`] / [`zf_beamforming`]: beamformers for fixed phases.
//! - [`phase_ascent`]: element-wise phase optimization for a fixed beamformer.
//! - [`alternating_optimize`]: block-coordinate ascent over `(G, Φ)`.
//! - [`brute_force_oracle`]: exhaustive search over a phase grid.
//! - [`random_phase_baseline`]: best of random phase draws.

mod beamforming;
mod phase;

pub use beamforming::{
    mrt_beamforming, wmmse_beamforming, wmmse_from, wmmse_multistart, zf_beamforming, WmmseOptions,
    WmmseRun,
};
pub use phase::{phase_ascent, PhaseAscent};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{
    effective_channels, init_action, init_beamformer, sum_rate, trace_power, CMatrix, CVector,
    ChannelSet, JointAction, SystemConfig,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct BenchResult {
    pub action: JointAction,
    pub sum_rate: f64,
    pub iterations: usize,
    /// Objective after each iteration (algorithm specific).
    pub trace: Vec<f64>,
}

/// Beamformer used inside the alternating loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeamformerKind {
    Wmmse,
    Zf,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AltOptions {
    pub outer_iters: usize,
    /// Stop once an outer iteration improves the sum rate by less than this.
    pub tol: f64,
    pub beamformer: BeamformerKind,
    pub phase_sweeps: usize,
    pub wmmse: WmmseOptions,
}

impl Default for AltOptions {
    fn default() -> Self {
        AltOptions {
            outer_iters: 50,
            tol: 1e-6,
            beamformer: BeamformerKind::Wmmse,
            phase_sweeps: 5,
            wmmse: WmmseOptions::default(),
        }
    }
}

/// Full-power feasible action; a zero beamformer (dead channels) is replaced
/// by the identity-based one.
fn feasible(g: CMatrix, phases: CVector, cfg: &SystemConfig) -> JointAction {
    let g = if trace_power(&g) > 0.0 && trace_power(&g).is_finite() {
        crate::env::project_power(&g, cfg.pt_linear())
    } else {
        init_beamformer(cfg.antennas, cfg.users, cfg.pt_linear())
    };
    JointAction { g, phases }
}

/// Best beamformer for the given phases, never worse than `incumbent`.
fn beamformer_step(
    incumbent: &CMatrix,
    phases: &CVector,
    channels: &ChannelSet,
    cfg: &SystemConfig,
    opts: &AltOptions,
) -> Result<CMatrix> {
    let h_eff = effective_channels(phases, channels)?;
    let candidate = match opts.beamformer {
        BeamformerKind::Wmmse => {
            Some(wmmse_multistart(&h_eff, Some(incumbent), cfg.pt_linear(), cfg.noise_power, &opts.wmmse).g)
        }
        BeamformerKind::Zf => zf_beamforming(&h_eff, cfg.pt_linear()).ok(),
    };
    let current = sum_rate(&feasible(incumbent.clone(), phases.clone(), cfg), channels, cfg.noise_power)?;
    if let Some(g) = candidate {
        let action = feasible(g, phases.clone(), cfg);
        if sum_rate(&action, channels, cfg.noise_power)? > current {
            return Ok(action.g);
        }
    }
    Ok(incumbent.clone())
}

/// Alternates a beamformer update (phases fixed) with [`phase_ascent`]
/// (beamformer fixed), starting from [`init_action`]. Both blocks keep the
/// incumbent unless they find something better, so the trace never
/// decreases.
pub fn alternating_optimize(channels: &ChannelSet, cfg: &SystemConfig, opts: &AltOptions) -> Result<BenchResult> {
    channels.check_against(cfg)?;
    let start = init_action(cfg);
    let mut g = start.g;
    let mut phases = start.phases;
    let mut current = sum_rate(&feasible(g.clone(), phases.clone(), cfg), channels, cfg.noise_power)?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    while iterations < opts.outer_iters {
        g = beamformer_step(&g, &phases, channels, cfg, opts)?;
        let ascent = phase_ascent(&g, &phases, channels, cfg.noise_power, opts.phase_sweeps)?;
        phases = ascent.phases;
        let value = sum_rate(&feasible(g.clone(), phases.clone(), cfg), channels, cfg.noise_power)?;
        iterations += 1;
        trace.push(value);
        let gain = value - current;
        current = value;
        if gain < opts.tol {
            break;
        }
    }
    let action = feasible(g, phases, cfg);
    let sum_rate = sum_rate(&action, channels, cfg.noise_power)?;
    Ok(BenchResult {
        action,
        sum_rate,
        iterations,
        trace,
    })
}

/// Largest allowed `N · log₂(L)` for the exhaustive search.
pub const ORACLE_BUDGET_BITS: f64 = 20.0;

fn grid_phases(mut index: usize, levels: usize, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| {
        let d = index % levels;
        index /= levels;
        Complex64::from_polar(1.0, 2.0 * PI * d as f64 / levels as f64)
    })
}

/// WMMSE (best of MRT and ZF starts) for fixed phases, as a feasible action
/// with its sum rate.
fn wmmse_for_phases(
    phases: CVector,
    channels: &ChannelSet,
    cfg: &SystemConfig,
    opts: &WmmseOptions,
) -> Result<(JointAction, f64)> {
    let h_eff = effective_channels(&phases, channels)?;
    let run = wmmse_beamforming(&h_eff, cfg.pt_linear(), cfg.noise_power, opts);
    let action = feasible(run.g, phases, cfg);
    let rate = sum_rate(&action, channels, cfg.noise_power)?;
    Ok((action, rate))
}

/// Enumerates all `L^N` phase vectors on the uniform `L`-point grid and
/// runs WMMSE on each. Refuses instances with `N · log₂(L) > 20`. Ties go to
/// the lowest grid index, so the parallel reduction is deterministic.
pub fn brute_force_oracle(
    channels: &ChannelSet,
    cfg: &SystemConfig,
    levels: usize,
    opts: &WmmseOptions,
) -> Result<BenchResult> {
    channels.check_against(cfg)?;
    if levels == 0 {
        return Err(Error::Config("oracle needs at least one phase level".into()));
    }
    let n = cfg.elements;
    let bits = n as f64 * (levels as f64).log2();
    if bits > ORACLE_BUDGET_BITS {
        return Err(Error::Budget(format!(
            "{levels}^{n} phase combinations ({bits:.1} bits) exceed the {ORACLE_BUDGET_BITS} bit limit"
        )));
    }
    let total = levels.pow(n as u32);
    let (best_rate, best_index) = (0..total)
        .into_par_iter()
        .map(|i| wmmse_for_phases(grid_phases(i, levels, n), channels, cfg, opts).map(|(_, r)| (r, i)))
        .try_reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                let better = b.0 > a.0 || (b.0 == a.0 && b.1 < a.1);
                Ok(if better { b } else { a })
            },
        )?;
    let (action, rate) = wmmse_for_phases(grid_phases(best_index, levels, n), channels, cfg, opts)?;
    debug_assert_eq!(rate, best_rate);
    Ok(BenchResult {
        action,
        sum_rate: rate,
        iterations: total,
        trace: vec![rate],
    })
}

/// Best of `draws` uniformly random phase vectors, each paired with WMMSE.
/// The trace holds the best value after each draw.
pub fn random_phase_baseline<R: Rng + ?Sized>(
    channels: &ChannelSet,
    cfg: &SystemConfig,
    draws: usize,
    rng: &mut R,
    opts: &WmmseOptions,
) -> Result<BenchResult> {
    channels.check_against(cfg)?;
    if draws == 0 {
        return Err(Error::Config("random-phase baseline needs at least one draw".into()));
    }
    let mut best: Option<(JointAction, f64)> = None;
    let mut trace = Vec::with_capacity(draws);
    for _ in 0..draws {
        let phases =
            CVector::from_fn(cfg.elements, |_, _| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)));
        let (action, rate) = wmmse_for_phases(phases, channels, cfg, opts)?;
        if best.as_ref().is_none_or(|(_, b)| rate > *b) {
            best = Some((action, rate));
        }
        trace.push(best.as_ref().map_or(rate, |(_, b)| *b));
    }
    let (action, sum_rate) = best.expect("draws >= 1");
    Ok(BenchResult {
        action,
        sum_rate,
        iterations: draws,
        trace,
    })
}
