use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::Hyperparams;
use crate::bench::{AltOptions, WmmseOptions, ORACLE_BUDGET_BITS};
use crate::env::SystemConfig;
use crate::error::{Error, Result};

/// Baseline or learner selectable in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Drl,
    WmmseAlt,
    ZfAlt,
    Random,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Drl,
        Algorithm::WmmseAlt,
        Algorithm::ZfAlt,
        Algorithm::Random,
        Algorithm::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Drl => "drl",
            Algorithm::WmmseAlt => "wmmse_alt",
            Algorithm::ZfAlt => "zf_alt",
            Algorithm::Random => "random",
            Algorithm::Oracle => "oracle",
        }
    }

    /// Stable index used when deriving per-algorithm random streams.
    pub(crate) fn stream(self) -> u64 {
        match self {
            Algorithm::Drl => 1,
            Algorithm::WmmseAlt => 2,
            Algorithm::ZfAlt => 3,
            Algorithm::Random => 4,
            Algorithm::Oracle => 5,
        }
    }
}

/// How the learner sees channels during a realization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrlChannels {
    /// Every episode uses the realization's channels.
    Fixed,
    /// Every episode draws fresh channels.
    Redraw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub antennas: usize,
    pub elements: usize,
    pub users: usize,
    pub pt_db: f64,
    #[serde(default = "unit")]
    pub noise_power: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            antennas: 4,
            elements: 4,
            users: 4,
            pt_db: 10.0,
            noise_power: 1.0,
        }
    }
}

/// Sweep axes. An omitted axis holds the base value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub pt_db: Option<Vec<f64>>,
    pub elements: Option<Vec<usize>>,
    /// Applied to both actor and critic base learning rates.
    pub mu: Option<Vec<f64>>,
    /// Applied to both actor and critic decay rates.
    pub lambda: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub oracle_levels: usize,
    pub random_draws: usize,
    pub alt_outer_iters: usize,
    pub alt_tol: f64,
    pub phase_sweeps: usize,
    pub wmmse_iters: usize,
    pub wmmse_tol: f64,
}

impl Default for BenchSection {
    fn default() -> Self {
        let alt = AltOptions::default();
        BenchSection {
            oracle_levels: 16,
            random_draws: 100,
            alt_outer_iters: alt.outer_iters,
            alt_tol: alt.tol,
            phase_sweeps: alt.phase_sweeps,
            wmmse_iters: alt.wmmse.max_iters,
            wmmse_tol: alt.wmmse.tol,
        }
    }
}

impl BenchSection {
    pub fn wmmse(&self) -> WmmseOptions {
        WmmseOptions {
            max_iters: self.wmmse_iters,
            tol: self.wmmse_tol,
        }
    }

    pub fn alt(&self) -> AltOptions {
        AltOptions {
            outer_iters: self.alt_outer_iters,
            tol: self.alt_tol,
            phase_sweeps: self.phase_sweeps,
            wmmse: self.wmmse(),
            ..AltOptions::default()
        }
    }
}

/// A full experiment: base system, learner settings, sweep axes and the
/// algorithms to run at every point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub realizations: usize,
    pub algorithms: Vec<Algorithm>,
    pub out: PathBuf,
    pub drl_channels: DrlChannels,
    /// Fill the `wall_ms` column with measured times. Off by default so that
    /// repeated runs produce identical files.
    pub record_timing: bool,
    pub system: SystemSection,
    pub hyper: Hyperparams,
    pub sweep: SweepSection,
    pub bench: BenchSection,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            seed: 0,
            realizations: 20,
            algorithms: vec![Algorithm::WmmseAlt],
            out: PathBuf::from("results"),
            drl_channels: DrlChannels::Fixed,
            record_timing: false,
            system: SystemSection::default(),
            hyper: Hyperparams::desk_scale(),
            sweep: SweepSection::default(),
            bench: BenchSection::default(),
        }
    }
}

/// One point of the sweep grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub system: SystemConfig,
    pub hyper: Hyperparams,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    pub fn base_system(&self) -> SystemConfig {
        SystemConfig {
            antennas: self.system.antennas,
            elements: self.system.elements,
            users: self.system.users,
            pt_db: self.system.pt_db,
            noise_power: self.system.noise_power,
            seed: self.seed,
        }
    }

    fn axis<T: Clone>(axis: &Option<Vec<T>>, base: T) -> Vec<T> {
        axis.clone().unwrap_or_else(|| vec![base])
    }

    /// Cartesian product of the axes, `pt_db` outermost, then `N`, `μ`, `λ`.
    pub fn points(&self) -> Vec<SweepPoint> {
        let base = self.base_system();
        let mut out = Vec::new();
        for pt in Self::axis(&self.sweep.pt_db, base.pt_db) {
            for n in Self::axis(&self.sweep.elements, base.elements) {
                for mu in Self::axis(&self.sweep.mu, self.hyper.mu_a) {
                    for lambda in Self::axis(&self.sweep.lambda, self.hyper.lambda_a) {
                        let system = SystemConfig {
                            pt_db: pt,
                            elements: n,
                            ..base.clone()
                        };
                        let hyper = Hyperparams {
                            mu_a: mu,
                            mu_c: mu,
                            lambda_a: lambda,
                            lambda_c: lambda,
                            ..self.hyper.clone()
                        };
                        out.push(SweepPoint {
                            index: out.len(),
                            system,
                            hyper,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if self.realizations > u32::MAX as usize {
            return Err(Error::Config("too many realizations".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("select at least one algorithm".into()));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::Config("algorithms are listed more than once".into()));
        }
        let empty = [
            ("sweep.pt_db", self.sweep.pt_db.as_ref().map(Vec::len)),
            ("sweep.elements", self.sweep.elements.as_ref().map(Vec::len)),
            ("sweep.mu", self.sweep.mu.as_ref().map(Vec::len)),
            ("sweep.lambda", self.sweep.lambda.as_ref().map(Vec::len)),
        ];
        for (name, len) in empty {
            if len == Some(0) {
                return Err(Error::Config(format!("{name} must not be empty")));
            }
        }
        let b = &self.bench;
        if b.random_draws == 0 || b.alt_outer_iters == 0 || b.wmmse_iters == 0 || b.oracle_levels == 0 {
            return Err(Error::Config("bench counts must be positive".into()));
        }
        if [b.alt_tol, b.wmmse_tol].iter().any(|t| t.is_nan() || *t < 0.0) {
            return Err(Error::Config("bench tolerances must be non-negative".into()));
        }
        self.hyper.validate()?;
        for p in self.points() {
            p.system.validate()?;
            p.hyper.validate()?;
            if self.algorithms.contains(&Algorithm::Oracle) {
                let bits = p.system.elements as f64 * (b.oracle_levels as f64).log2();
                if bits > ORACLE_BUDGET_BITS {
                    return Err(Error::Budget(format!(
                        "oracle selected but N={} with {} levels needs {bits:.1} bits (limit {ORACLE_BUDGET_BITS})",
                        p.system.elements, b.oracle_levels
                    )));
                }
            }
        }
        Ok(())
    }
}
