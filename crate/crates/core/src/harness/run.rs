use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::metrics::{empirical_cdf, RunSummary};
use super::seed::{stream_rng, sub_seed};
use super::spec::{Algorithm, DrlChannels, ExperimentSpec, SweepPoint};
use crate::agent::{train, train_on_channels};
use crate::bench::{alternating_optimize, brute_force_oracle, random_phase_baseline, AltOptions, BeamformerKind};
use crate::env::{generate_channels, ChannelSet, SystemConfig};
use crate::error::{Error, Result};

pub const SUMMARY_HEADER: &str = "algorithm,pt_db,M,N,K,seed,sum_rate,iterations,wall_ms";
pub const REWARDS_HEADER: &str = "step,instant_reward,average_reward,best_reward";
pub const CDF_HEADER: &str = "value,cdf";
pub const MEANS_HEADER: &str = "algorithm,point,pt_db,N,mu,lambda,mean_sum_rate,realizations";

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "RIS_SIM_THREADS";

/// One line of `summary.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub pt_db: f64,
    pub antennas: usize,
    pub elements: usize,
    pub users: usize,
    pub seed: u64,
    pub sum_rate: f64,
    pub iterations: usize,
    pub wall_ms: u128,
}

impl SummaryRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.algorithm.name(),
            self.pt_db,
            self.antennas,
            self.elements,
            self.users,
            self.seed,
            self.sum_rate,
            self.iterations,
            self.wall_ms
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 9 {
            return Err(Error::Config(format!("summary row needs 9 fields: {line}")));
        }
        fn num<T: FromStr>(s: &str) -> Result<T> {
            s.parse().map_err(|_| Error::Config(format!("bad summary field `{s}`")))
        }
        let algorithm = Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == fields[0])
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{}`", fields[0])))?;
        Ok(SummaryRow {
            algorithm,
            pt_db: num(fields[1])?,
            antennas: num(fields[2])?,
            elements: num(fields[3])?,
            users: num(fields[4])?,
            seed: num(fields[5])?,
            sum_rate: num(fields[6])?,
            iterations: num(fields[7])?,
            wall_ms: num(fields[8])?,
        })
    }
}

/// Parses a whole `summary.csv` document.
pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SUMMARY_HEADER) {
        return Err(Error::Config("summary.csv header mismatch".into()));
    }
    lines.map(SummaryRow::parse).collect()
}

/// A summary row tagged with its sweep coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub point: usize,
    pub realization: usize,
    pub row: SummaryRow,
}

#[derive(Clone, Debug)]
pub struct RewardTrace {
    pub point: usize,
    pub realization: usize,
    pub summary: RunSummary,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub points: Vec<SweepPoint>,
    /// Ordered by point, then realization, then the spec's algorithm order.
    pub records: Vec<Record>,
    pub traces: Vec<RewardTrace>,
}

impl ExperimentResult {
    pub fn values(&self, algorithm: Algorithm, point: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.point == point && r.row.algorithm == algorithm)
            .map(|r| r.row.sum_rate)
            .collect()
    }

    pub fn mean(&self, algorithm: Algorithm, point: usize) -> Option<f64> {
        let v = self.values(algorithm, point);
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn algorithms(&self) -> Vec<Algorithm> {
        let mut out: Vec<Algorithm> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.row.algorithm) {
                out.push(r.row.algorithm);
            }
        }
        out
    }
}

/// Worker count from `RIS_SIM_THREADS`; `None` means all cores.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Error::Config(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
        },
    }
}

/// Runs `f` on a pool honouring [`thread_cap`].
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Creates `dir` and proves it is writable.
pub fn prepare_output(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".ris-sim-write-probe");
    fs::write(&probe, b"").map_err(|e| Error::io(dir, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;
    Ok(())
}

/// Channels of one realization.
pub fn realization_channels(system: &SystemConfig, seed: u64) -> ChannelSet {
    generate_channels(system, &mut ChaCha8Rng::seed_from_u64(seed))
}

struct JobOutput {
    rows: Vec<SummaryRow>,
    trace: Option<RunSummary>,
}

fn run_job(spec: &ExperimentSpec, point: &SweepPoint, realization: usize) -> Result<JobOutput> {
    let seed = sub_seed(spec.seed, point.index, realization);
    let system = point.system.clone().with_seed(seed);
    let channels = realization_channels(&system, seed);
    let mut rows = Vec::with_capacity(spec.algorithms.len());
    let mut trace = None;
    for &alg in &spec.algorithms {
        let mut rng = stream_rng(seed, alg.stream());
        let started = Instant::now();
        let (sum_rate, iterations) = match alg {
            Algorithm::Drl => {
                let out = match spec.drl_channels {
                    DrlChannels::Fixed => train_on_channels(&system, &point.hyper, &channels, &mut rng)?,
                    DrlChannels::Redraw => train(&system, &point.hyper, &mut rng)?,
                };
                let steps = out.summary.instant.len();
                let best = out.summary.best_reward;
                trace = Some(out.summary);
                (best, steps)
            }
            Algorithm::WmmseAlt | Algorithm::ZfAlt => {
                let opts = AltOptions {
                    beamformer: if alg == Algorithm::ZfAlt {
                        BeamformerKind::Zf
                    } else {
                        BeamformerKind::Wmmse
                    },
                    ..spec.bench.alt()
                };
                let r = alternating_optimize(&channels, &system, &opts)?;
                (r.sum_rate, r.iterations)
            }
            Algorithm::Random => {
                let r = random_phase_baseline(&channels, &system, spec.bench.random_draws, &mut rng, &spec.bench.wmmse())?;
                (r.sum_rate, r.iterations)
            }
            Algorithm::Oracle => {
                let r = brute_force_oracle(&channels, &system, spec.bench.oracle_levels, &spec.bench.wmmse())?;
                (r.sum_rate, r.iterations)
            }
        };
        rows.push(SummaryRow {
            algorithm: alg,
            pt_db: system.pt_db,
            antennas: system.antennas,
            elements: system.elements,
            users: system.users,
            seed,
            sum_rate,
            iterations,
            wall_ms: if spec.record_timing {
                started.elapsed().as_millis()
            } else {
                0
            },
        });
    }
    Ok(JobOutput { rows, trace })
}

/// Runs every `(point, realization)` job without touching the disk. Jobs run
/// in parallel; results are merged in index order.
pub fn compute_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let points = spec.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.realizations).map(move |r| (p, r)))
        .collect();
    let outputs: Vec<Result<JobOutput>> =
        with_pool(|| jobs.par_iter().map(|&(p, r)| run_job(spec, &points[p], r)).collect())?;
    let mut records = Vec::new();
    let mut traces = Vec::new();
    for (&(point, realization), out) in jobs.iter().zip(outputs) {
        let out = out?;
        records.extend(out.rows.into_iter().map(|row| Record {
            point,
            realization,
            row,
        }));
        if let Some(summary) = out.trace {
            traces.push(RewardTrace {
                point,
                realization,
                summary,
            });
        }
    }
    Ok(ExperimentResult {
        points,
        records,
        traces,
    })
}

pub fn rewards_csv(summary: &RunSummary) -> String {
    let mut s = String::with_capacity(summary.instant.len() * 48);
    s.push_str(REWARDS_HEADER);
    s.push('\n');
    for (i, ((r, a), b)) in summary
        .instant
        .iter()
        .zip(&summary.average)
        .zip(&summary.best_so_far)
        .enumerate()
    {
        writeln!(s, "{i},{r},{a},{b}").expect("string write");
    }
    s
}

pub fn summary_csv<'a>(rows: impl IntoIterator<Item = &'a SummaryRow>) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for row in rows {
        s.push_str(&row.to_csv());
        s.push('\n');
    }
    s
}

pub fn cdf_csv(values: &[f64]) -> Result<String> {
    let mut s = String::from(CDF_HEADER);
    s.push('\n');
    for (v, p) in empirical_cdf(values)? {
        writeln!(s, "{v},{p}").expect("string write");
    }
    Ok(s)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes every output file of `result` into `dir` and returns their paths.
///
/// - `summary.csv`: one row per point, realization and algorithm;
/// - `means.csv`: per-algorithm mean sum rate at each point;
/// - `cdf_<point>_<algorithm>.csv`: empirical CDF over realizations;
/// - `rewards_<point>_<realization>.csv`: learner reward traces.
pub fn write_outputs(result: &ExperimentResult, spec: &ExperimentSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    emit("summary.csv".into(), summary_csv(result.records.iter().map(|r| &r.row)))?;

    let mut means = String::from(MEANS_HEADER);
    means.push('\n');
    for p in &result.points {
        for alg in result.algorithms() {
            let values = result.values(alg, p.index);
            if values.is_empty() {
                continue;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            writeln!(
                means,
                "{},{},{},{},{},{},{},{}",
                alg.name(),
                p.index,
                p.system.pt_db,
                p.system.elements,
                p.hyper.mu_a,
                p.hyper.lambda_a,
                mean,
                values.len()
            )
            .expect("string write");
            emit(format!("cdf_{}_{}.csv", p.index, alg.name()), cdf_csv(&values)?)?;
        }
    }
    emit("means.csv".into(), means)?;
    for t in &result.traces {
        emit(format!("rewards_{}_{}.csv", t.point, t.realization), rewards_csv(&t.summary))?;
    }
    emit("spec.toml".into(), spec.to_toml())?;
    Ok(written)
}

/// Validates the spec, checks the output directory, runs all jobs and writes
/// the result files.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    prepare_output(&spec.out)?;
    let result = compute_experiment(spec)?;
    write_outputs(&result, spec, &spec.out)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Hyperparams;
    use crate::harness::spec::SweepSection;

    fn tiny_spec(algorithms: Vec<Algorithm>, out: PathBuf) -> ExperimentSpec {
        let mut spec = ExperimentSpec {
            realizations: 1,
            algorithms,
            out,
            ..ExperimentSpec::default()
        };
        spec.system.antennas = 2;
        spec.system.elements = 2;
        spec.system.users = 2;
        spec.hyper = Hyperparams {
            episodes: 1,
            steps_per_episode: 40,
            hidden_width: Some(128),
            ..Hyperparams::default()
        };
        spec
    }

    #[test]
    fn minimal_spec_gives_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let spec = tiny_spec(vec![Algorithm::WmmseAlt], dir.path().to_path_buf());
        let result = run_experiment(&spec).unwrap();
        assert_eq!(result.records.len(), 1);
        let text = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        let rows = parse_summary(&text).unwrap();
        assert_eq!(rows, vec![result.records[0].row.clone()]);
        assert_eq!(rows[0].wall_ms, 0);
    }

    #[test]
    fn output_schema() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = tiny_spec(
            vec![Algorithm::Drl, Algorithm::WmmseAlt, Algorithm::ZfAlt, Algorithm::Random, Algorithm::Oracle],
            dir.path().to_path_buf(),
        );
        spec.realizations = 2;
        spec.sweep = SweepSection {
            pt_db: Some(vec![0.0, 10.0]),
            ..SweepSection::default()
        };
        spec.bench.oracle_levels = 4;
        spec.bench.random_draws = 3;
        let result = run_experiment(&spec).unwrap();
        assert_eq!(result.records.len(), 2 * 2 * 5);
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.lines().all(|l| l.split(',').count() == 9));
        assert_eq!(parse_summary(&summary).unwrap().len(), 20);
        for p in 0..2 {
            for r in 0..2 {
                let rewards = fs::read_to_string(dir.path().join(format!("rewards_{p}_{r}.csv"))).unwrap();
                let mut lines = rewards.lines();
                assert_eq!(lines.next(), Some(REWARDS_HEADER));
                assert_eq!(lines.clone().count(), 40);
                assert!(lines.all(|l| l.split(',').count() == 4));
            }
            for alg in Algorithm::ALL {
                let cdf = fs::read_to_string(dir.path().join(format!("cdf_{p}_{}.csv", alg.name()))).unwrap();
                let mut lines = cdf.lines();
                assert_eq!(lines.next(), Some(CDF_HEADER));
                let last = lines.last().unwrap();
                assert!(last.ends_with(",1"));
            }
        }
        let means = fs::read_to_string(dir.path().join("means.csv")).unwrap();
        assert_eq!(means.lines().count(), 1 + 2 * 5);
    }

    #[test]
    fn repeated_runs_are_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let spec_a = tiny_spec(vec![Algorithm::Drl, Algorithm::Random], a.path().to_path_buf());
        let spec_b = ExperimentSpec {
            out: b.path().to_path_buf(),
            ..spec_a.clone()
        };
        run_experiment(&spec_a).unwrap();
        run_experiment(&spec_b).unwrap();
        for name in ["summary.csv", "means.csv", "rewards_0_0.csv", "cdf_0_drl.csv"] {
            assert_eq!(
                fs::read(a.path().join(name)).unwrap(),
                fs::read(b.path().join(name)).unwrap(),
                "{name}"
            );
        }
    }

    #[test]
    fn unwritable_output_fails_before_compute() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let spec = tiny_spec(vec![Algorithm::WmmseAlt], blocker.join("sub"));
        let err = run_experiment(&spec).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn summary_parse_rejects_malformed_rows() {
        assert!(parse_summary("nope\n").is_err());
        assert!(parse_summary(&format!("{SUMMARY_HEADER}\nwmmse_alt,1,2,3\n")).is_err());
        assert!(parse_summary(&format!("{SUMMARY_HEADER}\nsdr,1,2,2,2,0,1.5,1,0\n")).is_err());
    }
}
