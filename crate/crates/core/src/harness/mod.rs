//! Experiment specs, seeding, sweeps, output files and the command line.

mod check;
mod cli;
mod metrics;
mod run;
mod seed;
mod spec;

pub use check::{agent_gradient_error, reference_sum_rate, run_checks, suite_names, SuiteOutcome};
pub use cli::cli_main;
pub use metrics::{average_reward, empirical_cdf, sum_rate_cdf, RunSummary};
pub use run::{
    cdf_csv, compute_experiment, parse_summary, prepare_output, realization_channels, rewards_csv, run_experiment,
    summary_csv, thread_cap, with_pool, write_outputs, ExperimentResult, Record, RewardTrace, SummaryRow, CDF_HEADER,
    MEANS_HEADER, REWARDS_HEADER, SUMMARY_HEADER, THREADS_ENV,
};
pub use seed::{mix64, stream_rng, sub_seed};
pub use spec::{Algorithm, BenchSection, DrlChannels, ExperimentSpec, SweepPoint, SweepSection, SystemSection};
