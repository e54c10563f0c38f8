//! Self-tests run by `ris-sim check`.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::metrics::average_reward;
use crate::agent::{actor_shape, critic_shape, train_on_channels, Hyperparams};
use crate::bench::{alternating_optimize, AltOptions};
use crate::env::{decode_action, generate_channels, sum_rate, ActionVector, JointAction, SystemConfig};
use crate::error::Result;
use crate::nn::{default_hidden_width, gradient_check, AdamState, DenseNet, Mode};

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteOutcome {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "pass" } else { "FAIL" };
        format!("check {}: {verdict} ({})", self.name, self.detail)
    }
}

type Suite = fn(u64) -> Result<(bool, String)>;

const SUITES: [(&str, Suite); 7] = [
    ("feasibility", feasibility),
    ("sum_rate", sum_rate_reference),
    ("gradients", gradients),
    ("adam", adam_fixed_point),
    ("average_reward", prefix_means),
    ("bench_monotone", bench_monotone),
    ("determinism", determinism),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|(n, _)| *n).collect()
}

/// Runs every suite; an internal error counts as a failure.
pub fn run_checks(seed: u64) -> Vec<SuiteOutcome> {
    SUITES
        .iter()
        .map(|(name, suite)| {
            let (passed, detail) = suite(seed).unwrap_or_else(|e| (false, format!("error: {e}")));
            SuiteOutcome { name, passed, detail }
        })
        .collect()
}

fn random_action(cfg: &SystemConfig, rng: &mut impl Rng) -> Result<JointAction> {
    let v: Vec<f64> = (0..cfg.action_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    decode_action(&ActionVector(v), cfg)
}

fn feasibility(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SystemConfig::new(3, 4, 2, 10.0)?;
    let draws = 2000;
    let mut bad = 0;
    for _ in 0..draws {
        if !random_action(&cfg, &mut rng)?.is_feasible(cfg.pt_linear(), 1e-9, 1e-12) {
            bad += 1;
        }
    }
    Ok((bad == 0, format!("{bad}/{draws} infeasible")))
}

/// Sum rate by explicit loops over users, antennas and elements.
#[allow(clippy::needless_range_loop)]
pub fn reference_sum_rate(action: &JointAction, h1: &[Vec<Complex64>], h2: &[Vec<Complex64>], noise: f64) -> f64 {
    let n = h1.len();
    let m = h1[0].len();
    let k_users = h2.len();
    let mut total = 0.0;
    for k in 0..k_users {
        let mut h_eff = vec![Complex64::new(0.0, 0.0); m];
        for (j, h) in h_eff.iter_mut().enumerate() {
            for e in 0..n {
                *h += h2[k][e] * action.phases[e] * h1[e][j];
            }
        }
        let gain = |col: usize| -> f64 {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, h) in h_eff.iter().enumerate() {
                s += h * action.g[(j, col)];
            }
            s.norm_sqr()
        };
        let interference: f64 = (0..k_users).filter(|&i| i != k).map(gain).sum();
        total += (1.0 + gain(k) / (interference + noise)).log2();
    }
    total
}

fn sum_rate_reference(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let m = rng.random_range(1..=3);
        let k = rng.random_range(1..=m);
        let cfg = SystemConfig::new(m, rng.random_range(1..=4), k, rng.random_range(-5.0..20.0))?;
        let ch = generate_channels(&cfg, &mut rng);
        let action = random_action(&cfg, &mut rng)?;
        let h1: Vec<Vec<Complex64>> = ch.h1.row_iter().map(|r| r.iter().copied().collect()).collect();
        let h2: Vec<Vec<Complex64>> = ch.h2.iter().map(|h| h.iter().copied().collect()).collect();
        let fast = sum_rate(&action, &ch, 1.0)?;
        let slow = reference_sum_rate(&action, &h1, &h2, 1.0);
        worst = worst.max((fast - slow).abs() / slow.abs().max(1.0));
    }
    Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
}

/// Largest gradient error over the actor and critic of the agent at
/// `M = N = K = 2`, checking every `stride`-th parameter.
pub fn agent_gradient_error(seed: u64, width: Option<usize>, stride: usize) -> Result<(f64, usize)> {
    let cfg = SystemConfig::new(2, 2, 2, 10.0)?;
    let (ds, da) = (cfg.state_dim(), cfg.action_dim());
    let width = width.unwrap_or_else(|| default_hidden_width(ds, da));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = 4;
    let draw = |cols: usize, rng: &mut ChaCha8Rng| Array2::from_shape_fn((batch, cols), |_| rng.random_range(-1.0..1.0));
    let states = draw(ds, &mut rng);
    let actions = draw(da, &mut rng);
    let mut actor = DenseNet::new(&actor_shape(&cfg, width), &mut rng)?;
    let mut critic = DenseNet::new(&critic_shape(&cfg, width), &mut rng)?;
    let actor_w = draw(da, &mut rng);
    let critic_w = draw(1, &mut rng);
    let a = gradient_check(&mut actor, states.view(), None, actor_w.view(), Mode::Train, stride)?;
    let c = gradient_check(&mut critic, states.view(), Some(actions.view()), critic_w.view(), Mode::Train, stride)?;
    Ok((a.max_rel_err.max(c.max_rel_err), a.checked + c.checked))
}

fn gradients(seed: u64) -> Result<(bool, String)> {
    let (err, checked) = agent_gradient_error(seed, None, 37)?;
    Ok((err < 1e-4, format!("max relative error {err:.2e} over {checked} partials")))
}

fn adam_fixed_point(_seed: u64) -> Result<(bool, String)> {
    let mut opt = AdamState::new(0.01, 0.0);
    let mut x = vec![1.5, -2.0, 0.25];
    let before = x.clone();
    for _ in 0..10 {
        opt.step(&mut [x.as_mut_slice()], &[&[0.0, 0.0, 0.0]])?;
    }
    let still = x == before;
    let mut opt = AdamState::new(0.01, 0.0);
    let mut y = vec![3.0];
    for _ in 0..3000 {
        let g = [2.0 * y[0]];
        opt.step(&mut [y.as_mut_slice()], &[&g])?;
    }
    Ok((still && y[0].abs() < 0.05, format!("zero gradient kept params: {still}; x² minimizer {:.3e}", y[0])))
}

fn prefix_means(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..10.0)).collect();
    let avg = average_reward(&xs)?;
    let mut sum = 0.0;
    let mut worst = 0.0f64;
    for (i, (x, a)) in xs.iter().zip(&avg).enumerate() {
        sum += x;
        worst = worst.max((sum / (i + 1) as f64 - a).abs());
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
}

fn bench_monotone(seed: u64) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SystemConfig::new(2, 3, 2, 10.0)?;
    let mut ok = true;
    for _ in 0..5 {
        let ch = generate_channels(&cfg, &mut rng);
        let out = alternating_optimize(&ch, &cfg, &AltOptions::default())?;
        ok &= out.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9);
        ok &= out.action.is_feasible(cfg.pt_linear(), 1e-9, 1e-12);
    }
    Ok((ok, "alternating traces non-decreasing and feasible".into()))
}

fn determinism(seed: u64) -> Result<(bool, String)> {
    let cfg = SystemConfig::new(2, 2, 2, 10.0)?.with_seed(seed);
    let ch = generate_channels(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
    let hyper = Hyperparams {
        episodes: 1,
        steps_per_episode: 60,
        hidden_width: Some(64),
        ..Hyperparams::default()
    };
    let run = || train_on_channels(&cfg, &hyper, &ch, &mut ChaCha8Rng::seed_from_u64(seed));
    let (a, b) = (run()?, run()?);
    let same = a.summary.instant == b.summary.instant && a.summary.best_action == b.summary.best_action;
    Ok((same, "two seeded training runs agree".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        for outcome in run_checks(3) {
            assert!(outcome.passed, "{}", outcome.line());
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names = suite_names();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), SUITES.len());
    }
}
