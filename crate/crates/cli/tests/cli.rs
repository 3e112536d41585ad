use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coinmec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coinmec"))
        .args(args)
        .env("COINMEC_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL: [&str; 6] = ["--episodes", "2", "--slots", "10", "--replications", "2"];

#[test]
fn help_lists_every_flag() {
    let o = coinmec(&["run", "--help"]);
    assert!(o.status.success());
    let help = stdout(&o);
    for flag in [
        "--config",
        "--seed",
        "--episodes",
        "--slots",
        "--replications",
        "--scheme",
        "--out",
        "--plots",
    ] {
        assert!(help.contains(flag), "run help lacks {flag}");
    }
    let sweep = stdout(&coinmec(&["sweep", "--help"]));
    assert!(sweep.contains("--sweep"));
    let top = stdout(&coinmec(&["--help"]));
    for cmd in ["run", "sweep", "verify", "dump-scenario", "replay", "COINMEC_LOG"] {
        assert!(top.contains(cmd), "top-level help lacks {cmd}");
    }
}

#[test]
fn missing_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let o = coinmec(&["run", "--config", "missing.toml", "--out", p(dir.path())]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("config not found"), "{}", stderr(&o));
}

#[test]
fn schema_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[system]\nn_uess = 3\n").unwrap();
    let o = coinmec(&["run", "--config", p(&cfg), "--out", p(dir.path())]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("config schema mismatch"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_and_scheme_are_rejected() {
    assert!(!coinmec(&["run", "--bogus"]).status.success());
    let o = coinmec(&["run", "--scheme", "FOO"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown scheme"));
}

#[test]
fn verify_reports_ne_containment() {
    let o = coinmec(&["verify", "--small-instances", "100", "--seed", "7"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("NE-containment 100/100"), "{}", stdout(&o));
}

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let mut args = vec!["run", "--seed", "5", "--out", p(dir.path()), "--plots"];
        args.extend_from_slice(&SMALL);
        let o = coinmec(&args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ma = fs::read(a.path().join("metrics.csv")).unwrap();
    let mb = fs::read(b.path().join("metrics.csv")).unwrap();
    assert_eq!(ma, mb);
    for f in [
        "summary.json",
        "trace.csv",
        "manifest.json",
        "checkpoint.json",
        "config.toml",
        "plots/utility_vs_episode.svg",
    ] {
        assert!(a.path().join(f).exists(), "missing {f}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["version"].as_str().unwrap().contains('('));
    let text = String::from_utf8(ma).unwrap();
    assert!(text.starts_with("episode,scheme,"));
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(5) == Some("5")));
}

#[test]
fn dump_then_replay_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let replay_dir = dir.path().join("replay");
    let dump_dir = dir.path().join("dump");

    let mut args = vec!["run", "--seed", "3", "--scheme", "EPG-Rand,MEC", "--out", p(&run_dir)];
    args.extend_from_slice(&SMALL);
    assert!(coinmec(&args).status.success());

    assert!(coinmec(&["dump-scenario", "--seed", "3", "--out", p(&dump_dir)])
        .status
        .success());
    let scenario = dump_dir.join("scenario.json");
    let mut args = vec![
        "replay",
        "--scenario",
        p(&scenario),
        "--scheme",
        "EPG-Rand,MEC",
        "--out",
        p(&replay_dir),
    ];
    args.extend_from_slice(&SMALL);
    let o = coinmec(&args);
    assert!(o.status.success(), "{}", stderr(&o));

    assert_eq!(
        fs::read(run_dir.join("metrics.csv")).unwrap(),
        fs::read(replay_dir.join("metrics.csv")).unwrap()
    );
}

#[test]
fn replay_rejects_foreign_json() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("x.json");
    fs::write(&f, "{\"hello\": 1}").unwrap();
    let o = coinmec(&["replay", "--scenario", p(&f), "--out", p(dir.path())]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("scenario schema mismatch"));
    let o = coinmec(&["replay", "--scenario", "nope.json"]);
    assert!(stderr(&o).contains("scenario not found"));
}

#[test]
fn sweep_writes_axis_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[experiment.sweep]\naxis = \"cn-count\"\nvalues = [1, 3]\n").unwrap();
    let mut args = vec![
        "sweep",
        "--sweep",
        "cn",
        "--config",
        p(&cfg),
        "--scheme",
        "MEC",
        "--plots",
        "--out",
        p(dir.path()),
    ];
    args.extend_from_slice(&SMALL);
    let o = coinmec(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"].as_array().unwrap().len(), 2);
    assert!(dir.path().join("plots/utility_vs_cn_count.svg").exists());
}

#[test]
fn shipped_default_config_matches_built_in_defaults() {
    let text = include_str!("../../../configs/default.toml");
    let parsed = coinmec::harness::RunConfig::from_toml(text).unwrap();
    assert_eq!(parsed, coinmec::harness::RunConfig::default());
}
