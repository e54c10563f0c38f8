use std::path::Path;
use std::process::{Command, Output};

fn ris_sim(args: &[&str], config: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ris-sim"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("c.toml");
    std::fs::write(
        &path,
        "[system]\nantennas = 2\nelements = 2\nusers = 2\npt_db = 10.0\n\
         [hyper]\nepisodes = 2\nsteps_per_episode = 100\nhidden_width = 64\n",
    )
    .unwrap();
    path
}

#[test]
fn check_passes_every_suite() {
    let out = ris_sim(&["check"], None, None);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), ris_sim::harness::suite_names().len());
    for name in ris_sim::harness::suite_names() {
        assert!(lines.iter().any(|l| l.starts_with(&format!("check {name}: pass"))), "{stdout}");
    }
}

#[test]
fn missing_config_names_the_path() {
    let out = ris_sim(&["bench"], Some(Path::new("/no/such/dir/spec.toml")), None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/dir/spec.toml"));
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "realizations = 0\n").unwrap();
    let out = ris_sim(&["sweep"], Some(&path), Some(dir.path()));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("realizations"));
}

#[test]
fn unknown_flag_prints_usage() {
    let out = ris_sim(&["train", "--learning-rate", "3"], None, None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn train_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let run = ris_sim(&["train", "--seed", "7"], Some(&config), Some(out));
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    for name in ["summary.csv", "rewards.csv", "actor.ckpt", "critic.ckpt"] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let rewards = std::fs::read_to_string(a.join("rewards.csv")).unwrap();
    assert_eq!(rewards.lines().count(), 1 + 200);
}

#[test]
fn trained_checkpoints_load() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let run = ris_sim(&["train"], Some(&config), Some(dir.path()));
    assert!(run.status.success());
    let actor = ris_sim::nn::checkpoint::load_net(&dir.path().join("actor.ckpt")).unwrap();
    assert_eq!(actor.hidden_widths(), vec![64, 64]);
}

#[test]
fn bench_includes_oracle_on_small_instances() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let run = ris_sim(&["bench"], Some(&config), Some(dir.path()));
    assert!(run.status.success());
    let rows = ris_sim::harness::parse_summary(&std::fs::read_to_string(dir.path().join("summary.csv")).unwrap()).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.algorithm.name()).collect();
    assert_eq!(names, ["wmmse_alt", "zf_alt", "random", "oracle"]);
    let oracle = rows[3].sum_rate;
    assert!(rows.iter().all(|r| r.sum_rate <= oracle * 1.01 + 1e-9));
}
