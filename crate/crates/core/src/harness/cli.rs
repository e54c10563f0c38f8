use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::check::run_checks;
use super::run::{compute_experiment, prepare_output, realization_channels, rewards_csv, run_experiment, summary_csv, write_file, SummaryRow};
use super::seed::{stream_rng, sub_seed};
use super::spec::{Algorithm, DrlChannels, ExperimentSpec, SweepSection};
use crate::agent::{train, train_on_channels};
use crate::bench::ORACLE_BUDGET_BITS;
use crate::error::Result;
use crate::nn::checkpoint::save_net;

#[derive(Debug, Parser)]
#[command(name = "ris-sim", version, about = "RIS-assisted MISO downlink design: DDPG optimizer, baselines and sweeps")]
struct Cli {
    /// Experiment spec (TOML). Defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the spec.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory, overriding the spec.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the DDPG agent once on the base system.
    Train {
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run the classical baselines on one channel realization.
    Bench,
    /// Run the full experiment described by the spec.
    Sweep,
    /// Exhaustive search over a discrete phase grid on one realization.
    Oracle {
        /// Phase levels per element (defaults to the spec's bench setting).
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Run the built-in self-tests.
    Check,
}

/// Entry point of the `ris-sim` binary; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if let Some(out) = &cli.out {
        spec.out = out.clone();
    }
    Ok(spec)
}

fn dispatch(cli: Cli) -> Result<i32> {
    if let Command::Check = cli.command {
        let outcomes = run_checks(cli.seed.unwrap_or(0));
        for o in &outcomes {
            println!("{}", o.line());
        }
        return Ok(if outcomes.iter().all(|o| o.passed) { 0 } else { 1 });
    }
    let mut spec = load_spec(&cli)?;
    match cli.command {
        Command::Train { episodes, steps } => {
            if let Some(n) = episodes {
                spec.hyper.episodes = n;
            }
            if let Some(t) = steps {
                spec.hyper.steps_per_episode = t;
            }
            run_train(&spec)
        }
        Command::Bench => {
            let tractable = spec.system.elements as f64 * (spec.bench.oracle_levels as f64).log2() <= ORACLE_BUDGET_BITS;
            let mut algorithms = vec![Algorithm::WmmseAlt, Algorithm::ZfAlt, Algorithm::Random];
            if tractable {
                algorithms.push(Algorithm::Oracle);
            }
            single_instance(spec, algorithms)
        }
        Command::Oracle { levels } => {
            if let Some(l) = levels {
                spec.bench.oracle_levels = l;
            }
            single_instance(spec, vec![Algorithm::Oracle])
        }
        Command::Sweep => {
            let result = run_experiment(&spec)?;
            for p in &result.points {
                for alg in result.algorithms() {
                    if let Some(mean) = result.mean(alg, p.index) {
                        println!(
                            "point {} (pt_db={}, N={}): {} mean sum rate {mean:.4}",
                            p.index,
                            p.system.pt_db,
                            p.system.elements,
                            alg.name()
                        );
                    }
                }
            }
            println!("wrote {}", spec.out.display());
            Ok(0)
        }
        Command::Check => unreachable!("handled above"),
    }
}

fn run_train(spec: &ExperimentSpec) -> Result<i32> {
    spec.validate()?;
    prepare_output(&spec.out)?;
    let seed = sub_seed(spec.seed, 0, 0);
    let system = spec.base_system().with_seed(seed);
    let mut rng = stream_rng(seed, Algorithm::Drl.stream());
    let outcome = match spec.drl_channels {
        DrlChannels::Fixed => train_on_channels(&system, &spec.hyper, &realization_channels(&system, seed), &mut rng)?,
        DrlChannels::Redraw => train(&system, &spec.hyper, &mut rng)?,
    };
    let s = &outcome.summary;
    let row = SummaryRow {
        algorithm: Algorithm::Drl,
        pt_db: system.pt_db,
        antennas: system.antennas,
        elements: system.elements,
        users: system.users,
        seed,
        sum_rate: s.best_reward,
        iterations: s.instant.len(),
        wall_ms: if spec.record_timing { s.wall_ms } else { 0 },
    };
    write_file(&spec.out.join("rewards.csv"), &rewards_csv(s))?;
    write_file(&spec.out.join("summary.csv"), &summary_csv([&row]))?;
    save_net(&outcome.bundle.actor, &spec.out.join("actor.ckpt"))?;
    save_net(&outcome.bundle.critic, &spec.out.join("critic.ckpt"))?;
    println!(
        "drl: best sum rate {:.4} bit/s/Hz after {} steps; final average reward {:.4}",
        s.best_reward,
        s.instant.len(),
        s.average.last().copied().unwrap_or(f64::NAN)
    );
    println!("wrote {}", spec.out.display());
    Ok(0)
}

fn single_instance(spec: ExperimentSpec, algorithms: Vec<Algorithm>) -> Result<i32> {
    let spec = ExperimentSpec {
        realizations: 1,
        algorithms,
        sweep: SweepSection::default(),
        ..spec
    };
    spec.validate()?;
    prepare_output(&spec.out)?;
    let result = compute_experiment(&spec)?;
    let rows: Vec<&SummaryRow> = result.records.iter().map(|r| &r.row).collect();
    for row in &rows {
        println!("{}: sum rate {:.4} bit/s/Hz ({} iterations)", row.algorithm.name(), row.sum_rate, row.iterations);
    }
    write_file(&spec.out.join("summary.csv"), &summary_csv(rows))?;
    println!("wrote {}", spec.out.display());
    Ok(0)
}
