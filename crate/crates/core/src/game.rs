//! The multi-user partial-offloading game.
//!
//! Each UE picks one of: run locally, offload to the ES (node 0), or split
//! its task between one CN `k` and the ES. A CN serves at most one UE. Given
//! the offloading ratios and ES shares supplied by an ORRA provider, the
//! utility of a decision depends only on the UE's own choice; UEs interact
//! through CN exclusivity.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::latency::{
    e2e_latency, full_es_reference_latency, local_latency, LatencyBreakdown, LatencyError, OffloadPlan,
};
use crate::orra::Orra;
use crate::rng::SimRng;
use crate::scenario::ScenarioState;

/// Minimum utility gain that counts as a strict improvement.
pub const IMPROVEMENT_TOL: f64 = 1e-9;
/// Largest profile space [`SlotGame::brute_force_ne`] will enumerate.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("enumeration of {size} profiles exceeds the budget of {ENUMERATION_BUDGET}")]
    BudgetExceeded { size: u64 },
    #[error("expected {expected} UEs, got {got}")]
    Shape { expected: usize, got: usize },
    #[error(transparent)]
    Latency(#[from] LatencyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    /// All-zero decision row.
    Local,
    /// `s_mj = 1`; node 0 is the ES, `1..=K` are CNs.
    Node(usize),
}

impl Decision {
    pub const ES: Decision = Decision::Node(0);

    /// Position in the candidate table: local first, then ES, then CNs.
    pub fn slot(self) -> usize {
        match self {
            Decision::Local => 0,
            Decision::Node(j) => j + 1,
        }
    }

    pub fn from_slot(slot: usize) -> Self {
        match slot {
            0 => Decision::Local,
            s => Decision::Node(s - 1),
        }
    }

    pub fn cn(self) -> Option<usize> {
        match self {
            Decision::Node(k) if k > 0 => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Local => write!(f, "local"),
            Decision::Node(0) => write!(f, "ES"),
            Decision::Node(k) => write!(f, "CN{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub decisions: Vec<Decision>,
}

impl StrategyProfile {
    pub fn new(decisions: Vec<Decision>) -> Self {
        Self { decisions }
    }

    /// Binary `s_mj` rows over `{ES, CN_1..CN_K}`.
    pub fn matrix(&self, n_cns: usize) -> Vec<Vec<u8>> {
        self.decisions
            .iter()
            .map(|d| {
                let mut row = vec![0u8; n_cns + 1];
                if let Decision::Node(j) = *d {
                    row[j] = 1;
                }
                row
            })
            .collect()
    }

    /// UE holding CN `k`, if any.
    pub fn holder_of(&self, k: usize) -> Option<usize> {
        self.decisions.iter().position(|d| d.cn() == Some(k))
    }

    /// Each CN is used by at most one UE.
    pub fn cn_exclusive(&self, n_cns: usize) -> bool {
        (1..=n_cns).all(|k| self.decisions.iter().filter(|d| d.cn() == Some(k)).count() <= 1)
    }
}

impl fmt::Display for StrategyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.decisions.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// One UE's evaluation of one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub decision: Decision,
    /// Portion sent to the ES.
    pub aleph: f64,
    /// Portion sent to the chosen CN.
    pub lambda: f64,
    pub es_share: f64,
    pub latency: LatencyBreakdown,
    /// Satisfies the latency constraint `s_mj T_e2e <= T_max`; always true
    /// for local execution, whose decision row is all zeros.
    pub feasible: bool,
    /// Whether the task finishes within its deadline.
    pub meets_deadline: bool,
    pub utility: f64,
    /// `g_t (T_em - T_kcn) - p_j Phi_j C_m` for the selected node.
    pub pair_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstraintFlags {
    /// At most one node per UE.
    pub c10a: bool,
    /// At most one UE per CN.
    pub c10b: bool,
    /// Latency bound on every selected decision.
    pub c10c: bool,
    /// ES shares sum to at most one.
    pub c10d: bool,
    /// Binary decisions, ratios and shares in [0, 1].
    pub c10e: bool,
}

impl ConstraintFlags {
    pub fn all(&self) -> bool {
        self.c10a && self.c10b && self.c10c && self.c10d && self.c10e
    }

    pub fn violations(&self) -> usize {
        [self.c10a, self.c10b, self.c10c, self.c10d, self.c10e]
            .iter()
            .filter(|ok| !**ok)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityReport {
    pub per_ue: Vec<f64>,
    pub system: f64,
    pub potential: f64,
    pub constraints: ConstraintFlags,
}

/// Accepted unilateral update in a PCO run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub round: usize,
    pub ue: usize,
    pub old: String,
    pub new: String,
    pub u_before: f64,
    pub u_after: f64,
    /// Literal potential after the update.
    pub phi: f64,
    pub system_utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcoOutcome {
    pub profile: StrategyProfile,
    pub rounds: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

/// Candidate table for one slot.
#[derive(Debug, Clone)]
pub struct SlotGame {
    n_cns: usize,
    active: Vec<bool>,
    table: Vec<Vec<Candidate>>,
    orra: Orra,
}

impl SlotGame {
    /// Evaluates every UE/decision pair under `orra`.
    ///
    /// The latency-reduction gain is measured against offloading the whole
    /// task to the ES with an equal share of the ES among active UEs.
    #[allow(clippy::needless_range_loop)]
    pub fn new(scn: &ScenarioState, uplink_bps: &[f64], orra: &Orra) -> Result<Self, GameError> {
        let m = scn.n_ues();
        for got in [uplink_bps.len(), orra.aleph.len(), orra.beta.len()] {
            if got != m {
                return Err(GameError::Shape { expected: m, got });
            }
        }
        let k = scn.n_cns();
        let cfg = &scn.config;
        let gain = cfg.gain_latency_reduction;
        let active: Vec<bool> = (0..m).map(|u| scn.task_of(u).is_some()).collect();
        let reference = Orra::full_offload(&active);

        let mut table = Vec::with_capacity(m);
        for ue in 0..m {
            let mut row = Vec::with_capacity(k + 2);
            let Some(task) = scn.task_of(ue) else {
                row.push(Candidate {
                    decision: Decision::Local,
                    aleph: 0.0,
                    lambda: 0.0,
                    es_share: 0.0,
                    latency: LatencyBreakdown {
                        feasible: true,
                        ..Default::default()
                    },
                    feasible: true,
                    meets_deadline: true,
                    utility: 0.0,
                    pair_value: 0.0,
                });
                table.push(row);
                continue;
            };
            let t_local = local_latency(task, scn.ues[ue].local_rate_hz);
            row.push(Candidate {
                decision: Decision::Local,
                aleph: 0.0,
                lambda: 0.0,
                es_share: 0.0,
                latency: LatencyBreakdown {
                    t_e2e: t_local,
                    feasible: t_local <= task.max_latency_s,
                    ..Default::default()
                },
                feasible: true,
                meets_deadline: t_local <= task.max_latency_s,
                utility: 0.0,
                pair_value: 0.0,
            });

            let t_ref = full_es_reference_latency(task, uplink_bps[ue], scn.es(), reference.beta[ue])?;
            for j in 0..=k {
                let (aleph, lambda) = if j == 0 {
                    (1.0, 0.0)
                } else {
                    (orra.aleph[ue], 1.0 - orra.aleph[ue])
                };
                let es_share = if aleph > 0.0 { orra.beta[ue] } else { 0.0 };
                let mut plan = OffloadPlan::idle(1, k);
                plan.ratio_es[0] = aleph;
                plan.es_share[0] = es_share;
                if j > 0 {
                    plan.ratios_cn[0][j - 1] = lambda;
                }
                let latency = e2e_latency(&plan, 0, task, uplink_bps[ue], &scn.nodes)?;
                let gc = task.gigacycles();
                let es_cost = scn.nodes[0].cost_per_gigacycle * aleph * gc;
                let cn_cost = if j > 0 {
                    scn.nodes[j].cost_per_gigacycle * lambda * gc
                } else {
                    0.0
                };
                let finite = latency.t_e2e.is_finite() && t_ref.is_finite();
                let utility = if finite {
                    gain * (t_ref - latency.t_e2e) - es_cost - cn_cost
                } else {
                    f64::NEG_INFINITY
                };
                let own_share = if j == 0 { aleph } else { lambda };
                let pair_value =
                    gain * (latency.t_es - latency.t_cn) - scn.nodes[j].cost_per_gigacycle * own_share * gc;
                row.push(Candidate {
                    decision: Decision::Node(j),
                    aleph,
                    lambda,
                    es_share,
                    latency,
                    feasible: finite && latency.feasible,
                    meets_deadline: finite && latency.feasible,
                    utility,
                    pair_value,
                });
            }
            table.push(row);
        }
        Ok(Self {
            n_cns: k,
            active,
            table,
            orra: orra.clone(),
        })
    }

    pub fn n_ues(&self) -> usize {
        self.table.len()
    }

    pub fn n_cns(&self) -> usize {
        self.n_cns
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn orra(&self) -> &Orra {
        &self.orra
    }

    pub fn candidate(&self, ue: usize, decision: Decision) -> Option<&Candidate> {
        self.table[ue].get(decision.slot())
    }

    /// Decisions UE `ue` may take at all (ignoring other UEs).
    pub fn options(&self, ue: usize) -> impl Iterator<Item = &Candidate> {
        self.table[ue].iter()
    }

    /// `U_m`, or `-inf` for a decision violating the latency constraint.
    pub fn utility(&self, ue: usize, decision: Decision) -> f64 {
        match self.candidate(ue, decision) {
            Some(c) if c.feasible => c.utility,
            _ => f64::NEG_INFINITY,
        }
    }

    /// All-ES start for active UEs, local for idle ones.
    pub fn initial_profile(&self) -> StrategyProfile {
        StrategyProfile::new(
            self.active
                .iter()
                .map(|&a| if a { Decision::ES } else { Decision::Local })
                .collect(),
        )
    }

    /// Best feasible decision of `ue` against the others in `profile`.
    /// Ties go to local, then the lowest node index.
    pub fn best_response(&self, ue: usize, profile: &StrategyProfile) -> (Decision, f64) {
        let mut best = (Decision::Local, 0.0);
        for c in self.table[ue].iter().skip(1) {
            if !c.feasible {
                continue;
            }
            if let Some(k) = c.decision.cn() {
                if matches!(profile.holder_of(k), Some(h) if h != ue) {
                    continue;
                }
            }
            if c.utility > best.1 {
                best = (c.decision, c.utility);
            }
        }
        best
    }

    /// UEs with a strictly improving unilateral deviation.
    fn improvers(&self, profile: &StrategyProfile) -> Vec<(usize, Decision, f64)> {
        (0..self.n_ues())
            .filter_map(|ue| {
                let current = self.utility(ue, profile.decisions[ue]);
                let (d, u) = self.best_response(ue, profile);
                (u > current + IMPROVEMENT_TOL).then_some((ue, d, u))
            })
            .collect()
    }

    pub fn is_nash_equilibrium(&self, profile: &StrategyProfile) -> bool {
        self.improvers(profile).is_empty()
    }

    /// Multi-user PCO: start at the ES, let one randomly chosen improving UE
    /// update per round, stop when nobody wants to move.
    pub fn run_pco(&self, max_rounds: usize, rng: &mut SimRng) -> PcoOutcome {
        let mut profile = self.initial_profile();
        let mut trace = Vec::new();
        let mut rounds = 0;
        let mut converged = false;
        while rounds < max_rounds.max(1) {
            rounds += 1;
            let wants = self.improvers(&profile);
            if wants.is_empty() {
                converged = true;
                break;
            }
            let (ue, new, u_after) = wants[rng.random_range(0..wants.len())];
            let old = profile.decisions[ue];
            let u_before = self.utility(ue, old);
            profile.decisions[ue] = new;
            trace.push(TraceRow {
                round: rounds,
                ue,
                old: old.to_string(),
                new: new.to_string(),
                u_before,
                u_after,
                phi: self.potential(&profile),
                system_utility: self.system_utility(&profile),
            });
        }
        if !converged {
            for ue in 0..self.n_ues() {
                if !self.utility(ue, profile.decisions[ue]).is_finite() {
                    profile.decisions[ue] = Decision::Local;
                }
            }
        }
        PcoOutcome {
            profile,
            rounds,
            converged,
            trace,
        }
    }

    /// Conventional MEC: each active UE picks the faster of local execution
    /// and full ES offload among those meeting the deadline (local if none).
    pub fn mec_profile(&self) -> StrategyProfile {
        StrategyProfile::new(
            (0..self.n_ues())
                .map(|ue| {
                    let local = &self.table[ue][0];
                    let Some(es) = self.candidate(ue, Decision::ES) else {
                        return Decision::Local;
                    };
                    match (local.meets_deadline, es.feasible) {
                        (_, false) => Decision::Local,
                        (false, true) => Decision::ES,
                        (true, true) if es.latency.t_e2e < local.latency.t_e2e => Decision::ES,
                        _ => Decision::Local,
                    }
                })
                .collect(),
        )
    }

    pub fn system_utility(&self, profile: &StrategyProfile) -> f64 {
        (0..self.n_ues())
            .map(|ue| self.utility(ue, profile.decisions[ue]))
            .sum()
    }

    /// Potential as typeset, with the leading `s_m0` bound by the sum over
    /// `m` (the only reading in which every index is bound):
    /// `sum_m s_m0 [R_m0 + (1 - s_m0)(sum_k s_mk R_mk + sum_{m' != m} R_m'0)]`.
    pub fn potential(&self, profile: &StrategyProfile) -> f64 {
        let m = self.n_ues();
        let r = |ue: usize, j: usize| self.table[ue].get(j + 1).map_or(0.0, |c| c.pair_value);
        let s = |ue: usize, j: usize| -> f64 {
            if profile.decisions[ue] == Decision::Node(j) {
                1.0
            } else {
                0.0
            }
        };
        (0..m)
            .map(|ue| {
                let s0 = s(ue, 0);
                let cn_terms: f64 = (1..=self.n_cns).map(|k| s(ue, k) * r(ue, k)).sum();
                let others: f64 = (0..m).filter(|&o| o != ue).map(|o| r(o, 0)).sum();
                s0 * (r(ue, 0) + (1.0 - s0) * (cn_terms + others))
            })
            .sum()
    }

    /// Offloading plan implied by a profile.
    pub fn plan(&self, profile: &StrategyProfile) -> OffloadPlan {
        let mut plan = OffloadPlan::idle(self.n_ues(), self.n_cns);
        for (ue, &d) in profile.decisions.iter().enumerate() {
            if let Some(c) = self.candidate(ue, d) {
                plan.ratio_es[ue] = c.aleph;
                plan.es_share[ue] = c.es_share;
                if let Some(k) = d.cn() {
                    plan.ratios_cn[ue][k - 1] = c.lambda;
                }
            }
        }
        plan
    }

    /// Constraint audit of a profile together with its plan.
    pub fn audit(&self, profile: &StrategyProfile) -> ConstraintFlags {
        let plan = self.plan(profile);
        let matrix = profile.matrix(self.n_cns);
        let c10a = matrix.iter().all(|row| row.iter().map(|&x| x as u32).sum::<u32>() <= 1);
        let c10b = profile.cn_exclusive(self.n_cns)
            && profile
                .decisions
                .iter()
                .all(|d| matches!(d, Decision::Local | Decision::Node(0)) || d.cn().is_some_and(|k| k <= self.n_cns));
        let c10c = profile
            .decisions
            .iter()
            .enumerate()
            .all(|(ue, &d)| d == Decision::Local || self.candidate(ue, d).is_some_and(|c| c.feasible));
        let c10d = plan.es_share.iter().sum::<f64>() <= 1.0 + crate::latency::RATIO_SUM_TOL;
        let in_unit = |x: &f64| (0.0..=1.0).contains(x);
        let c10e = profile.decisions.len() == self.n_ues()
            && profile
                .decisions
                .iter()
                .enumerate()
                .all(|(ue, &d)| self.active[ue] || d == Decision::Local)
            && plan.ratio_es.iter().all(in_unit)
            && plan.es_share.iter().all(in_unit)
            && plan.ratios_cn.iter().flatten().all(in_unit)
            && plan.validate().is_ok();
        ConstraintFlags {
            c10a,
            c10b,
            c10c,
            c10d,
            c10e,
        }
    }

    pub fn report(&self, profile: &StrategyProfile) -> UtilityReport {
        let per_ue: Vec<f64> = (0..self.n_ues())
            .map(|ue| self.utility(ue, profile.decisions[ue]))
            .collect();
        UtilityReport {
            system: per_ue.iter().sum(),
            per_ue,
            potential: self.potential(profile),
            constraints: self.audit(profile),
        }
    }

    /// Every profile satisfying the exclusivity and latency constraints.
    pub fn feasible_profiles(&self) -> Result<Vec<StrategyProfile>, GameError> {
        let m = self.n_ues();
        let base = (self.n_cns + 2) as u64;
        let size = (0..m)
            .try_fold(1u64, |acc, _| acc.checked_mul(base))
            .unwrap_or(u64::MAX);
        if size > ENUMERATION_BUDGET {
            return Err(GameError::BudgetExceeded { size });
        }
        let mut out = Vec::new();
        let mut digits = vec![0usize; m];
        'outer: loop {
            let profile = StrategyProfile::new(digits.iter().map(|&d| Decision::from_slot(d)).collect());
            let allowed = profile.decisions.iter().enumerate().all(|(ue, &d)| {
                d == Decision::Local || (self.active[ue] && self.candidate(ue, d).is_some_and(|c| c.feasible))
            });
            if allowed && profile.cn_exclusive(self.n_cns) {
                out.push(profile);
            }
            for d in digits.iter_mut() {
                *d += 1;
                if *d < self.n_cns + 2 {
                    continue 'outer;
                }
                *d = 0;
            }
            break;
        }
        Ok(out)
    }

    /// All pure Nash equilibria, by enumeration.
    pub fn brute_force_ne(&self) -> Result<Vec<StrategyProfile>, GameError> {
        let profiles = self.feasible_profiles()?;
        Ok(profiles
            .into_iter()
            .filter(|p| {
                (0..self.n_ues()).all(|ue| {
                    let current = self.utility(ue, p.decisions[ue]);
                    (0..self.n_cns + 2).map(Decision::from_slot).all(|alt| {
                        if alt == p.decisions[ue] {
                            return true;
                        }
                        if let Some(k) = alt.cn() {
                            if p.holder_of(k).is_some() {
                                return true;
                            }
                        }
                        let u = if alt == Decision::Local {
                            0.0
                        } else {
                            self.utility(ue, alt)
                        };
                        !(u > current + IMPROVEMENT_TOL)
                    })
                })
            })
            .collect())
    }
}
