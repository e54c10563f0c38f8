//! Only test in this binary, so changing the environment is race-free.

use ris_sim::harness::{compute_experiment, thread_cap, Algorithm, ExperimentSpec, SweepSection, THREADS_ENV};

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut spec = ExperimentSpec {
        realizations: 3,
        algorithms: vec![Algorithm::Drl, Algorithm::Random, Algorithm::WmmseAlt],
        sweep: SweepSection {
            pt_db: Some(vec![0.0, 10.0]),
            ..SweepSection::default()
        },
        ..ExperimentSpec::default()
    };
    spec.system.antennas = 2;
    spec.system.elements = 2;
    spec.system.users = 2;
    spec.hyper.episodes = 1;
    spec.hyper.steps_per_episode = 50;
    spec.hyper.hidden_width = Some(64);
    let run = |threads: &str| {
        std::env::set_var(THREADS_ENV, threads);
        assert_eq!(thread_cap().unwrap(), Some(threads.parse().unwrap()));
        compute_experiment(&spec).unwrap()
    };
    let serial = run("1");
    let pooled = run("4");
    std::env::set_var(THREADS_ENV, "many");
    assert!(compute_experiment(&spec).is_err());
    assert_eq!(serial.records, pooled.records);
    for (a, b) in serial.traces.iter().zip(&pooled.traces) {
        assert_eq!(a.summary.instant, b.summary.instant);
    }
}
