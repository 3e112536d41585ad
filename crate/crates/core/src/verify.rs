//! Oracle suites: latency identities, finite-blocklength sanity, NE
//! containment, finite improvement, potential audit and constraint scan.
//!
//! Each suite returns a [`SuiteResult`]; the CLI prints them and the
//! acceptance tests assert on them.

use rand::Rng;
use serde::Serialize;
use std::fmt;

use crate::channel::{q_function, q_inverse, realize_channel, urllc_rate};
use crate::config::SystemConfig;
use crate::game::{SlotGame, StrategyProfile};
use crate::latency::{cn_estimated_latency, cn_latency_gap, es_latency};
use crate::orra::{random_orra, ActionCodec, Orra};
use crate::rng::{self, tag, SimRng};
use crate::scenario::{generate_scenario, ScenarioState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub checked: usize,
    pub failures: usize,
    pub detail: String,
}

impl SuiteResult {
    fn new(name: &str, checked: usize, failures: usize, detail: String) -> Self {
        Self {
            name: name.to_string(),
            checked,
            failures,
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {} {}/{} ({})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checked - self.failures,
            self.checked,
            self.detail
        )
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Estimated latency plus twin gap equals the physical latency
/// `portion C / (f - f_dev)` on CN and ES alike.
pub fn latency_identities(draws: usize, seed: u64) -> SuiteResult {
    let mut rng = rng::stream(seed, &[tag::VERIFY, 1]);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..draws {
        let portion: f64 = rng.random_range(1e-3..=1.0);
        let cycles = rng.random_range(1e7..5e9);
        let f = rng.random_range(1e8..5e10);
        let frac: f64 = rng.random_range(0.0..0.9);
        let dev = frac * f;

        let est = cn_estimated_latency(&[portion], cycles, &[f]).unwrap();
        let gap = cn_latency_gap(portion, cycles, f, dev).unwrap();
        let e_cn = rel_err(est + gap, portion * cycles / (f - dev));

        let beta: f64 = rng.random_range(1e-3..=1.0);
        let es = es_latency(portion, cycles, beta, f, frac).unwrap();
        let phys = portion * cycles / (beta * f * (1.0 - frac));
        let e_es = rel_err(es.total, phys).max(rel_err(es.est + es.gap, phys));

        let e = e_cn.max(e_es);
        worst = worst.max(e);
        if e > 1e-12 {
            failures += 1;
        }
    }
    SuiteResult::new(
        "latency-identities",
        draws,
        failures,
        format!("max rel err {worst:.2e}"),
    )
}

/// Short-packet rate never exceeds Shannon capacity, converges to it for
/// very long blocks, and the inverse Q-function round-trips.
pub fn finite_blocklength(grid: usize, seed: u64) -> SuiteResult {
    let mut rng = rng::stream(seed, &[tag::VERIFY, 2]);
    let mut failures = 0;
    let mut checked = 0;
    let mut worst_long = 0.0f64;
    let mut worst_q = 0.0f64;
    for _ in 0..grid {
        let gamma = 10f64.powf(rng.random_range(-3.0..4.0));
        let b = 10f64.powf(rng.random_range(5.0..8.0));
        let n = 10f64.powf(rng.random_range(1.0..5.0));
        let eps = 10f64.powf(rng.random_range(-12.0..-1.0));
        let shannon = b * (1.0 + gamma).log2();
        let w = urllc_rate(gamma, b, n, eps).unwrap();
        checked += 1;
        if !(w >= 0.0 && w <= shannon * (1.0 + 1e-15)) {
            failures += 1;
        }
    }
    for _ in 0..200 {
        let gamma = 10f64.powf(rng.random_range(-1.0..3.0));
        let b = 1e7;
        let shannon = b * (1.0 + gamma).log2();
        let e = rel_err(urllc_rate(gamma, b, 1e12, 1e-9).unwrap(), shannon);
        worst_long = worst_long.max(e);
        checked += 1;
        if e > 1e-4 {
            failures += 1;
        }
    }
    for i in 0..=1000 {
        // log-uniform sweep of [1e-12, 0.5]
        let t = i as f64 / 1000.0;
        let eps = (1e-12f64.ln() + t * (0.5f64.ln() - 1e-12f64.ln())).exp();
        let x = q_inverse(eps).unwrap();
        let e = rel_err(q_function(x), eps);
        worst_q = worst_q.max(e);
        checked += 1;
        if e > 1e-6 {
            failures += 1;
        }
    }
    SuiteResult::new(
        "finite-blocklength",
        checked,
        failures,
        format!("long-block rel err {worst_long:.2e}, Q round-trip {worst_q:.2e}"),
    )
}

/// A seeded small game: scenario, uplink rates and a random ORRA whose
/// values come from `levels` evenly spaced points in [0, 1].
#[derive(Debug, Clone)]
pub struct Instance {
    pub scenario: ScenarioState,
    pub rates: Vec<f64>,
    pub orra: Orra,
}

impl Instance {
    pub fn game(&self) -> SlotGame {
        SlotGame::new(&self.scenario, &self.rates, &self.orra).expect("instance is consistent")
    }
}

/// Draws a random instance with `1..=max_ues` UEs and `1..=max_cns` CNs.
/// The latency gain and deadline are randomised so that all decision
/// kinds appear across instances.
pub fn random_instance(rng: &mut SimRng, max_ues: usize, max_cns: usize, levels: usize) -> Instance {
    let cfg = SystemConfig {
        n_ues: rng.random_range(1..=max_ues),
        n_cns: rng.random_range(1..=max_cns),
        n_task_types: 3,
        gain_latency_reduction: 10f64.powf(rng.random_range(0.0..2.5)),
        deadline_s: rng.random_range(0.1..1.5),
        ..Default::default()
    };
    let mut scenario = generate_scenario(&cfg, rng.random()).expect("valid instance config");
    let requests: Vec<usize> = (0..cfg.n_ues).map(|_| rng.random_range(0..=cfg.n_task_types)).collect();
    scenario.set_requests(&requests);
    let active: Vec<bool> = requests.iter().map(|&r| r > 0).collect();
    let channel = realize_channel(&scenario, &active, rng).expect("valid channel");
    let codec = ActionCodec::new(levels).expect("levels >= 2");
    let orra = random_orra(rng, &active, &codec);
    Instance {
        scenario,
        rates: channel.rate_bps,
        orra,
    }
}

/// Outcome of the NE containment suite plus the constraint tally of every
/// profile it produced.
pub fn ne_containment(instances: usize, seed: u64) -> (SuiteResult, usize) {
    let mut rng = rng::stream(seed, &[tag::VERIFY, 3]);
    let mut failures = 0;
    let mut violations = 0;
    let mut ne_sizes = 0;
    for _ in 0..instances {
        let inst = random_instance(&mut rng, 3, 2, 3);
        let game = inst.game();
        let out = game.run_pco(50 * game.n_ues(), &mut rng);
        let set = game.brute_force_ne().expect("small instance enumerates");
        ne_sizes += set.len();
        violations += game.audit(&out.profile).violations();
        if !(out.converged && set.contains(&out.profile) && game.is_nash_equilibrium(&out.profile)) {
            failures += 1;
        }
    }
    (
        SuiteResult::new(
            "NE-containment",
            instances,
            failures,
            format!("mean NE set size {:.2}", ne_sizes as f64 / instances.max(1) as f64),
        ),
        violations,
    )
}

/// Best-response dynamics converge within `50 M` rounds and every accepted
/// update strictly raises the mover's utility and the system utility.
pub fn finite_improvement(runs: usize, seed: u64) -> (SuiteResult, usize) {
    let mut rng = rng::stream(seed, &[tag::VERIFY, 4]);
    let mut failures = 0;
    let mut violations = 0;
    let mut max_rounds_seen = 0;
    for _ in 0..runs {
        let inst = random_instance(&mut rng, 6, 5, 11);
        let game = inst.game();
        let out = game.run_pco(50 * game.n_ues(), &mut rng);
        max_rounds_seen = max_rounds_seen.max(out.rounds);
        violations += game.audit(&out.profile).violations();
        let mut ok = out.converged;
        // Replay the trace. UEs stuck on an infeasible option have utility
        // -inf, so progress is measured lexicographically: fewer such UEs,
        // then a larger finite utility sum.
        let mut profile = game.initial_profile();
        let mut last = progress(&game, &profile);
        for row in &out.trace {
            ok &= row.u_after > row.u_before;
            ok &= profile.decisions[row.ue].to_string() == row.old;
            let next = game
                .options(row.ue)
                .find(|c| c.decision.to_string() == row.new)
                .map(|c| c.decision);
            let Some(next) = next else {
                ok = false;
                break;
            };
            profile.decisions[row.ue] = next;
            let now = progress(&game, &profile);
            ok &= now.0 < last.0 || (now.0 == last.0 && now.1 > last.1);
            last = now;
        }
        ok &= profile == out.profile;
        if !ok {
            failures += 1;
        }
    }
    (
        SuiteResult::new(
            "finite-improvement",
            runs,
            failures,
            format!("max rounds {max_rounds_seen}"),
        ),
        violations,
    )
}

fn progress(game: &SlotGame, profile: &StrategyProfile) -> (usize, f64) {
    let mut stuck = 0;
    let mut sum = 0.0;
    for (ue, &d) in profile.decisions.iter().enumerate() {
        let u = game.utility(ue, d);
        if u.is_finite() {
            sum += u;
        } else {
            stuck += 1;
        }
    }
    (stuck, sum)
}

/// One unilateral deviation in the potential audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpgRow {
    pub instance: usize,
    pub ue: usize,
    pub from: String,
    pub to: String,
    pub delta_utility: f64,
    pub delta_phi_literal: f64,
    pub delta_system_utility: f64,
}

impl EpgRow {
    pub fn literal_matches(&self) -> bool {
        close(self.delta_phi_literal, self.delta_utility)
    }

    pub fn sum_matches(&self) -> bool {
        close(self.delta_system_utility, self.delta_utility)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

fn profile_label(p: &StrategyProfile) -> String {
    p.decisions.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("|")
}

/// Exhaustive unilateral-deviation table on two-UE, one-CN instances,
/// comparing the literal potential and the utility sum against the
/// mover's utility change.
pub fn epg_table(instances: usize, seed: u64) -> (SuiteResult, Vec<EpgRow>) {
    let mut rng = rng::stream(seed, &[tag::VERIFY, 5]);
    let mut rows = Vec::new();
    let mut n = 0;
    while n < instances {
        let mut inst = random_instance(&mut rng, 2, 1, 11);
        if inst.scenario.n_ues() != 2 {
            continue;
        }
        // both UEs active so every decision kind is exercised
        let req: Vec<usize> = inst.scenario.requests().iter().map(|&r| r.max(1)).collect();
        inst.scenario.set_requests(&req);
        let active = vec![true; 2];
        inst.orra = Orra::renormalized(
            inst.orra.aleph.clone(),
            inst.orra.beta.iter().map(|b| b.max(0.1)).collect(),
            &active,
        );
        let game = inst.game();
        let profiles = game.feasible_profiles().expect("tiny instance");
        for a in &profiles {
            for b in &profiles {
                let diff: Vec<usize> = (0..2).filter(|&m| a.decisions[m] != b.decisions[m]).collect();
                if diff.len() != 1 {
                    continue;
                }
                let m = diff[0];
                rows.push(EpgRow {
                    instance: n,
                    ue: m,
                    from: profile_label(a),
                    to: profile_label(b),
                    delta_utility: game.utility(m, b.decisions[m]) - game.utility(m, a.decisions[m]),
                    delta_phi_literal: game.potential(b) - game.potential(a),
                    delta_system_utility: game.system_utility(b) - game.system_utility(a),
                });
            }
        }
        n += 1;
    }
    let literal = rows.iter().filter(|r| r.literal_matches()).count();
    let sum_fail = rows.iter().filter(|r| !r.sum_matches()).count();
    let detail = format!(
        "{} deviations; literal potential matches {}/{}; utility sum matches {}/{}",
        rows.len(),
        literal,
        rows.len(),
        rows.len() - sum_fail,
        rows.len()
    );
    (SuiteResult::new("EPG-table", rows.len(), sum_fail, detail), rows)
}

/// Full report of [`run_all`].
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
    pub constraint_violations: usize,
    pub epg_rows: Vec<EpgRow>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub small_instances: usize,
    pub latency_draws: usize,
    pub blocklength_grid: usize,
    pub improvement_runs: usize,
    pub epg_instances: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            small_instances: 100,
            latency_draws: 1000,
            blocklength_grid: 10_000,
            improvement_runs: 1000,
            epg_instances: 20,
        }
    }
}

pub fn run_all(opts: &VerifyOptions) -> VerifyReport {
    let (ne, v1) = ne_containment(opts.small_instances, opts.seed);
    let (fi, v2) = finite_improvement(opts.improvement_runs, opts.seed);
    let (epg, epg_rows) = epg_table(opts.epg_instances, opts.seed);
    let violations = v1 + v2;
    let audit = SuiteResult::new(
        "constraint-audit",
        opts.small_instances + opts.improvement_runs,
        violations,
        format!("{violations} constraint violations"),
    );
    VerifyReport {
        suites: vec![
            latency_identities(opts.latency_draws, opts.seed),
            finite_blocklength(opts.blocklength_grid, opts.seed),
            ne,
            fi,
            epg,
            audit,
        ],
        constraint_violations: violations,
        epg_rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_at_small_scale() {
        let r = run_all(&VerifyOptions {
            small_instances: 10,
            latency_draws: 50,
            blocklength_grid: 200,
            improvement_runs: 20,
            epg_instances: 3,
            ..Default::default()
        });
        for s in &r.suites {
            assert!(s.passed(), "{s}");
        }
        assert!(!r.epg_rows.is_empty());
    }

    #[test]
    fn instance_orra_uses_three_levels() {
        let mut rng = rng::stream(5, &[0]);
        for _ in 0..20 {
            let inst = random_instance(&mut rng, 3, 2, 3);
            for (&a, &b) in inst.orra.aleph.iter().zip(&inst.orra.beta) {
                assert!([0.0, 0.5, 1.0].contains(&a));
                assert!((0.0..=1.0).contains(&b));
            }
        }
    }

    #[test]
    fn display_format() {
        let s = SuiteResult::new("x", 4, 1, "d".into());
        assert_eq!(s.to_string(), "[FAIL] x 3/4 (d)");
    }
}
