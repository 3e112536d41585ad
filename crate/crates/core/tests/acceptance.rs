//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use coinmec::harness::metrics::Summary;
use coinmec::harness::{aggregate, run_experiment, Dataset, ExperimentSpec, RunConfig, Scheme, Sweep};
use coinmec::orra::learner::LearnerConfig;
use coinmec::verify;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let took = t.elapsed();
    if took > limit {
        o.pass = false;
        o.detail.push_str(&format!(
            "; runtime {:.1}s exceeds {:.0}s",
            took.as_secs_f64(),
            limit.as_secs_f64()
        ));
    } else {
        o.detail.push_str(&format!("; {:.2}s", took.as_secs_f64()));
    }
    o
}

fn csv_bytes(data: &Dataset) -> Vec<u8> {
    let mut buf = Vec::new();
    data.write_metrics(&mut buf).expect("in-memory CSV");
    buf
}

/// Total constraint violations recorded in an emitted metrics CSV.
fn scan_violations(csv: &[u8]) -> usize {
    let back = Dataset::read_metrics(csv).expect("emitted CSV parses");
    back.rows.iter().map(|r| r.constraint_violations).sum()
}

fn p1() -> Outcome {
    timed(Duration::from_secs(1), || {
        let r = verify::latency_identities(1000, 1);
        outcome(r.passed(), r.to_string())
    })
}

fn p2() -> Outcome {
    timed(Duration::from_secs(5), || {
        let r = verify::finite_blocklength(10_000, 2);
        outcome(r.passed(), r.to_string())
    })
}

fn p3() -> Outcome {
    timed(Duration::from_secs(60), || {
        let (r, _) = verify::ne_containment(100, 3);
        outcome(r.passed() && r.checked == 100, r.to_string())
    })
}

fn p4() -> Outcome {
    timed(Duration::from_secs(120), || {
        let (r, _) = verify::finite_improvement(1000, 4);
        outcome(r.passed() && r.checked == 1000, r.to_string())
    })
}

fn p5() -> Outcome {
    let (_, rows) = verify::epg_table(20, 5);
    let literal = rows.iter().filter(|x| x.literal_matches()).count();
    let finding = if literal == rows.len() {
        "literal potential is exact".to_string()
    } else {
        format!(
            "literal potential mismatches {} of {} deviations; the utility sum is the exact potential",
            rows.len() - literal,
            rows.len()
        )
    };
    outcome(!rows.is_empty(), format!("{} rows; {finding}", rows.len()))
}

fn learner_defaults() -> LearnerConfig {
    LearnerConfig::default()
}

fn p6(csvs: &mut Vec<Vec<u8>>) -> Outcome {
    timed(Duration::from_secs(600), || {
        let cfg = RunConfig {
            learner: learner_defaults(),
            experiment: ExperimentSpec {
                schemes: vec![Scheme::DdqnEpg, Scheme::EpgRand],
                episodes: 50,
                slots_per_episode: 100,
                replications: 5,
                summary_tail_episodes: 10,
                seed: 1,
                ..Default::default()
            },
            ..Default::default()
        };
        let data = run_experiment(&cfg, None).expect("experiment runs");
        csvs.push(csv_bytes(&data));
        let s = aggregate(&data, 10);
        let ours = s.row("DDQN-EPG", "-").map(|r| r.utility_mean).unwrap_or(f64::NAN);
        let base = s.row("EPG-Rand", "-").map(|r| r.utility_mean).unwrap_or(f64::NAN);
        let gain = (ours - base) / base.abs() * 100.0;
        outcome(
            base > 0.0 && gain >= 10.0,
            format!("DDQN-EPG {ours:.4} vs EPG-Rand {base:.4}: {gain:+.1}% (need >= +10%)"),
        )
    })
}

fn p7(csvs: &mut Vec<Vec<u8>>) -> Outcome {
    timed(Duration::from_secs(900), || {
        let cfg = RunConfig {
            learner: learner_defaults(),
            experiment: ExperimentSpec {
                schemes: vec![Scheme::DdqnEpg, Scheme::Mec],
                episodes: 20,
                slots_per_episode: 50,
                replications: 20,
                summary_tail_episodes: 0,
                sweep: Sweep::task_default(),
                seed: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let data = run_experiment(&cfg, None).expect("experiment runs");
        csvs.push(csv_bytes(&data));
        let s: Summary = aggregate(&data, 0);
        let mut pass = true;
        let mut parts = Vec::new();
        for suite in ["data-intensive", "compute-intensive"] {
            let ours = s.row("DDQN-EPG", suite).map(|r| r.utility_mean).unwrap_or(f64::NAN);
            let mec = s.row("MEC", suite).map(|r| r.utility_mean).unwrap_or(f64::NAN);
            pass &= ours > mec;
            parts.push(format!("{suite}: DDQN-EPG {ours:.4} vs MEC {mec:.4}"));
        }
        outcome(pass, parts.join("; "))
    })
}

fn p8(csvs: &[Vec<u8>]) -> Outcome {
    let report = verify::run_all(&verify::VerifyOptions::default());
    let in_csv: usize = csvs.iter().map(|c| scan_violations(c)).sum();
    let total = report.constraint_violations + in_csv;
    outcome(
        total == 0 && !csvs.is_empty(),
        format!(
            "{} violations in verify suites, {} in {} emitted CSVs",
            report.constraint_violations,
            in_csv,
            csvs.len()
        ),
    )
}

fn p9(csvs: &mut Vec<Vec<u8>>) -> Outcome {
    let cfg = RunConfig {
        learner: learner_defaults(),
        experiment: ExperimentSpec {
            episodes: 4,
            slots_per_episode: 25,
            replications: 3,
            seed: 9,
            ..Default::default()
        },
        ..Default::default()
    };
    let a = csv_bytes(&run_experiment(&cfg, None).expect("first run"));
    let b = csv_bytes(&run_experiment(&cfg, None).expect("second run"));
    let same = a == b;
    let n = a.len();
    csvs.push(a);
    outcome(same, format!("two runs, {n} bytes each, identical: {same}"))
}

fn p10() -> Outcome {
    let grad = (0..5).map(common::gradient_check).fold(0.0, f64::max);
    let losses = common::overfit_losses(300);
    let monotone = losses.windows(2).all(|w| w[1] < w[0]);
    let learned = common::toy_learned_q(5000, 3);
    let q_err = common::max_rel_err(&learned, &common::toy_optimal_q(0.9));
    outcome(
        grad <= 1e-4 && monotone && q_err <= 0.05,
        format!(
            "gradient rel err {grad:.2e}; overfit loss {:.3} -> {:.3} monotone {monotone}; toy-MDP Q rel err {:.2}%",
            losses[0],
            losses.last().unwrap(),
            q_err * 100.0
        ),
    )
}

fn main() -> ExitCode {
    let mut csvs = Vec::new();
    let mut results: Vec<(&str, &str, Outcome)> = Vec::new();
    let mut record = |id, name, o: Outcome| {
        println!("{id} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o));
    };
    record("P1", "latency algebra identity", p1());
    record("P2", "finite-blocklength sanity", p2());
    record("P3", "NE correctness", p3());
    record("P4", "finite improvement", p4());
    record("P5", "exact-potential audit", p5());
    record("P6", "DDQN learning signal", p6(&mut csvs));
    record("P7", "scheme ordering", p7(&mut csvs));
    record("P9", "determinism", p9(&mut csvs));
    record("P8", "constraint audit", p8(&csvs));
    record("P10", "DDQN machinery", p10());
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
