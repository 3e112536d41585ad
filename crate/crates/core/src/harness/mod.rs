//! Experiment orchestration.
//!
//! A run is a set of jobs, one per (sweep point, replication). Each job runs
//! every scheme over the same request and fading streams, so the schemes
//! are compared under common random numbers.

pub mod metrics;
pub mod plot;

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

use crate::channel::{realize_channel, ChannelError, ChannelRealization};
use crate::config::{validate_config, ConfigError, SystemConfig, TaskSuite};
use crate::game::{Decision, GameError, SlotGame, StrategyProfile, TraceRow};
use crate::latency::OffloadPlan;
use crate::orra::learner::{Checkpoint, LearnerConfig, QLearner};
use crate::orra::replay::Transition;
use crate::orra::{encode_state, random_orra, ActionCodec, MdpState, Orra, OrraError};
use crate::rng::{self, tag, SimRng};
use crate::scenario::{generate_scenario, sample_requests, ScenarioState};

pub use metrics::{aggregate, Dataset, MetricsRecord, SummaryRow, TraceRecord};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Orra(#[from] OrraError),
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "DDQN-EPG")]
    DdqnEpg,
    #[serde(rename = "EPG-Rand")]
    EpgRand,
    #[serde(rename = "MEC")]
    Mec,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::DdqnEpg, Scheme::EpgRand, Scheme::Mec];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::DdqnEpg => "DDQN-EPG",
            Scheme::EpgRand => "EPG-Rand",
            Scheme::Mec => "MEC",
        }
    }

    fn id(self) -> u64 {
        match self {
            Scheme::DdqnEpg => 0,
            Scheme::EpgRand => 1,
            Scheme::Mec => 2,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ddqn-epg" | "ddqn" => Ok(Scheme::DdqnEpg),
            "epg-rand" | "rand" => Ok(Scheme::EpgRand),
            "mec" => Ok(Scheme::Mec),
            _ => Err(format!("unknown scheme `{s}` (expected DDQN-EPG, EPG-Rand or MEC)")),
        }
    }
}

/// Sweep axis and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "axis", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sweep {
    #[default]
    None,
    UeCount {
        values: Vec<usize>,
    },
    CnCount {
        values: Vec<usize>,
    },
    TaskType {
        values: Vec<TaskSuite>,
    },
}

impl Sweep {
    pub fn ue_default() -> Self {
        Sweep::UeCount {
            values: vec![4, 6, 8, 10, 12],
        }
    }

    pub fn cn_default() -> Self {
        Sweep::CnCount {
            values: (1..=10).collect(),
        }
    }

    pub fn task_default() -> Self {
        Sweep::TaskType {
            values: vec![TaskSuite::DataIntensive, TaskSuite::ComputeIntensive],
        }
    }

    pub fn axis_name(&self) -> &'static str {
        match self {
            Sweep::None => "none",
            Sweep::UeCount { .. } => "ue_count",
            Sweep::CnCount { .. } => "cn_count",
            Sweep::TaskType { .. } => "task_type",
        }
    }

    /// `(label, config)` for every sweep point.
    pub fn points(&self, base: &SystemConfig) -> Vec<(String, SystemConfig)> {
        match self {
            Sweep::None => vec![("-".to_string(), base.clone())],
            Sweep::UeCount { values } => values
                .iter()
                .map(|&v| {
                    (
                        v.to_string(),
                        SystemConfig {
                            n_ues: v,
                            ..base.clone()
                        },
                    )
                })
                .collect(),
            Sweep::CnCount { values } => values
                .iter()
                .map(|&v| {
                    (
                        v.to_string(),
                        SystemConfig {
                            n_cns: v,
                            ..base.clone()
                        },
                    )
                })
                .collect(),
            Sweep::TaskType { values } => values
                .iter()
                .map(|&v| {
                    (
                        v.name().to_string(),
                        SystemConfig {
                            task_suite: v,
                            ..base.clone()
                        },
                    )
                })
                .collect(),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Spec(m.to_string()));
        match self {
            Sweep::None => Ok(()),
            Sweep::UeCount { values } if values.is_empty() || values.iter().any(|v| !(4..=12).contains(v)) => {
                bad("UE sweep values must lie in [4, 12]")
            }
            Sweep::CnCount { values } if values.is_empty() || values.iter().any(|v| !(1..=10).contains(v)) => {
                bad("CN sweep values must lie in [1, 10]")
            }
            Sweep::TaskType { values } if values.is_empty() => bad("task sweep needs at least one suite"),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schemes: Vec<Scheme>,
    pub episodes: usize,
    pub slots_per_episode: usize,
    pub sweep: Sweep,
    pub replications: usize,
    /// Master seed of every stream except the scenario (`system.rng_seed`).
    pub seed: u64,
    /// Best-response rounds allowed per UE.
    pub rounds_per_ue: usize,
    /// Final episodes averaged per replication in the summary.
    pub summary_tail_episodes: usize,
    /// Wall-clock budget in seconds; 0 disables it.
    pub time_budget_s: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            schemes: Scheme::ALL.to_vec(),
            episodes: 50,
            slots_per_episode: 100,
            sweep: Sweep::None,
            replications: 5,
            seed: 1,
            rounds_per_ue: 50,
            summary_tail_episodes: 10,
            time_budget_s: 0.0,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes == 0 {
            return Err(HarnessError::Spec("episodes must be at least 1".into()));
        }
        if self.slots_per_episode == 0 {
            return Err(HarnessError::Spec("slots_per_episode must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(HarnessError::Spec("replications must be at least 1".into()));
        }
        if self.schemes.is_empty() {
            return Err(HarnessError::Spec("scheme set is empty".into()));
        }
        if self.rounds_per_ue == 0 {
            return Err(HarnessError::Spec("rounds_per_ue must be at least 1".into()));
        }
        self.sweep.validate()
    }
}

/// Everything a run needs; also the config file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub learner: LearnerConfig,
    pub experiment: ExperimentSpec,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        validate_config(&self.system)?;
        self.learner.validate()?;
        self.experiment.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }
}

/// Request and fading streams for one (sweep point, replication).
#[derive(Debug, Clone)]
pub struct SlotEnv {
    pub scenario: ScenarioState,
    requests: SimRng,
    fading: SimRng,
}

impl SlotEnv {
    pub fn new(scenario: ScenarioState, seed: u64, point: u64, replication: u64) -> Self {
        Self {
            scenario,
            requests: rng::stream(seed, &[tag::REQUESTS, point, replication]),
            fading: rng::stream(seed, &[tag::FADING, point, replication]),
        }
    }

    /// Draws the next slot's requests and channel.
    pub fn advance(&mut self) -> Result<ChannelRealization, HarnessError> {
        let scn = &mut self.scenario;
        let prev = scn.requests();
        let req = sample_requests(scn.config.request_model, scn.catalog.len(), &prev, &mut self.requests);
        scn.set_requests(&req);
        scn.slot += 1;
        let active: Vec<bool> = req.iter().map(|&r| r > 0).collect();
        Ok(realize_channel(scn, &active, &mut self.fading)?)
    }
}

/// Per-scheme mutable state.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum SchemeState {
    Ddqn(Box<DdqnAgent>),
    Rand { rng: SimRng, codec: ActionCodec },
    Mec,
}

#[derive(Debug, Clone)]
pub struct DdqnAgent {
    pub learner: QLearner,
    pub codec: ActionCodec,
    pub n_tasks: usize,
    /// State and action whose outcome the next slot reveals.
    pub pending: (MdpState, Vec<usize>),
    explore: SimRng,
    pub decisions: u64,
    pub total_decisions: u64,
    pub last_loss: Option<f64>,
}

impl DdqnAgent {
    pub fn new(
        cfg: &LearnerConfig,
        n_ues: usize,
        n_tasks: usize,
        seed: u64,
        total_decisions: u64,
    ) -> Result<Self, HarnessError> {
        let codec = ActionCodec::new(cfg.levels)?;
        let learner = QLearner::new(cfg.clone(), n_ues * (n_tasks + 1), n_ues, codec.actions(), seed);
        let mut explore = rng::stream(seed, &[tag::EXPLORE]);
        let state = encode_state(&vec![0; n_ues], n_tasks)?;
        let action = learner.select_action(&state.onehot, &mut explore, cfg.explore_start);
        Ok(Self {
            learner,
            codec,
            n_tasks,
            pending: (state, action),
            explore,
            decisions: 1,
            total_decisions,
            last_loss: None,
        })
    }

    pub fn explore_rate(&self) -> f64 {
        self.learner.config().explore_rate(self.decisions, self.total_decisions)
    }
}

impl SchemeState {
    pub fn new(
        scheme: Scheme,
        learner: &LearnerConfig,
        scn: &ScenarioState,
        seed: u64,
        job: &[u64],
        total_slots: u64,
    ) -> Result<Self, HarnessError> {
        let mut tags = vec![tag::ORRA];
        tags.extend_from_slice(job);
        Ok(match scheme {
            Scheme::DdqnEpg => {
                let mut t = vec![tag::LEARNER];
                t.extend_from_slice(job);
                let learner_seed: u64 = rng::stream(seed, &t).random();
                SchemeState::Ddqn(Box::new(DdqnAgent::new(
                    learner,
                    scn.n_ues(),
                    scn.catalog.len(),
                    learner_seed,
                    total_slots,
                )?))
            }
            Scheme::EpgRand => SchemeState::Rand {
                rng: rng::stream(seed, &tags),
                codec: ActionCodec::new(learner.levels)?,
            },
            Scheme::Mec => SchemeState::Mec,
        })
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            SchemeState::Ddqn(_) => Scheme::DdqnEpg,
            SchemeState::Rand { .. } => Scheme::EpgRand,
            SchemeState::Mec => Scheme::Mec,
        }
    }
}

/// Result of one decision slot.
#[derive(Debug, Clone)]
pub struct SlotOutcome {
    pub requests: Vec<usize>,
    pub uplink_bps: Vec<f64>,
    pub orra: Orra,
    pub profile: StrategyProfile,
    pub plan: OffloadPlan,
    pub per_ue_utility: Vec<f64>,
    pub system_utility: f64,
    pub head_rewards: Vec<f64>,
    pub reward: f64,
    pub mean_latency_s: f64,
    pub rounds: usize,
    pub converged: bool,
    pub violations: usize,
    pub deadline_misses: usize,
    pub trace: Vec<TraceRow>,
    pub loss: Option<f64>,
}

/// Per-UE reward: utility under the chosen profile minus utility under the
/// full-offload reference; a UE whose task misses its deadline receives
/// `penalty` instead.
pub fn compute_reward(game: &SlotGame, profile: &StrategyProfile, full: &SlotGame, penalty: f64) -> (Vec<f64>, f64) {
    let parts: Vec<f64> = (0..game.n_ues())
        .map(|ue| {
            if !game.active()[ue] {
                return 0.0;
            }
            let d = profile.decisions[ue];
            let c = game.candidate(ue, d).expect("profile decisions exist in the table");
            if !c.meets_deadline {
                return penalty;
            }
            let reference = full.candidate(ue, Decision::ES).map_or(0.0, |r| r.utility);
            // A zero-rate uplink makes the reference utility undefined.
            let reference = if reference.is_finite() { reference } else { 0.0 };
            game.utility(ue, d) - reference
        })
        .collect();
    let total = parts.iter().sum();
    (parts, total)
}

/// One decision slot: requests and channel, ORRA, offloading game,
/// utilities and reward. DDQN-EPG also stores the transition, trains once
/// and predicts the next slot's ORRA.
pub fn run_slot(
    env: &mut SlotEnv,
    state: &mut SchemeState,
    winner: &mut SimRng,
    rounds_per_ue: usize,
    penalty: f64,
) -> Result<SlotOutcome, HarnessError> {
    let channel = env.advance()?;
    let scn = &env.scenario;
    let requests = scn.requests();
    let active: Vec<bool> = requests.iter().map(|&r| r > 0).collect();
    let full_orra = Orra::full_offload(&active);

    let orra = match state {
        SchemeState::Ddqn(agent) => agent.codec.decode_orra(&agent.pending.1, &active)?,
        SchemeState::Rand { rng, codec } => random_orra(rng, &active, codec),
        SchemeState::Mec => full_orra.clone(),
    };
    let game = SlotGame::new(scn, &channel.rate_bps, &orra)?;
    let full = SlotGame::new(scn, &channel.rate_bps, &full_orra)?;

    let (profile, rounds, converged, trace) = match state {
        SchemeState::Mec => (game.mec_profile(), 1, true, Vec::new()),
        _ => {
            let out = game.run_pco(rounds_per_ue * scn.n_ues(), winner);
            (out.profile, out.rounds, out.converged, out.trace)
        }
    };
    let report = game.report(&profile);
    let (head_rewards, reward) = compute_reward(&game, &profile, &full, penalty);

    let mut latency_sum = 0.0;
    let mut misses = 0;
    for (ue, &d) in profile.decisions.iter().enumerate() {
        if !active[ue] {
            continue;
        }
        let c = game.candidate(ue, d).expect("decision in table");
        latency_sum += c.latency.t_e2e;
        if !c.meets_deadline {
            misses += 1;
        }
    }
    let n_active = active.iter().filter(|&&a| a).count();

    let mut loss = None;
    if let SchemeState::Ddqn(agent) = state {
        let next_state = encode_state(&requests, agent.n_tasks)?;
        let (prev_state, prev_action) = std::mem::replace(&mut agent.pending, (next_state.clone(), Vec::new()));
        agent.learner.remember(Transition {
            state: prev_state.onehot,
            actions: prev_action,
            head_rewards: head_rewards.clone(),
            reward,
            next_state: next_state.onehot.clone(),
            terminal: false,
        });
        loss = agent.learner.train_step();
        agent.last_loss = loss;
        let eps = agent.explore_rate();
        agent.pending.1 = agent.learner.select_action(&next_state.onehot, &mut agent.explore, eps);
        agent.decisions += 1;
    }

    Ok(SlotOutcome {
        plan: game.plan(&profile),
        requests,
        uplink_bps: channel.rate_bps,
        orra,
        per_ue_utility: report.per_ue,
        system_utility: report.system,
        head_rewards,
        reward,
        mean_latency_s: if n_active > 0 {
            latency_sum / n_active as f64
        } else {
            0.0
        },
        rounds,
        converged,
        violations: report.constraints.violations(),
        deadline_misses: misses,
        profile,
        trace,
        loss,
    })
}

/// Runs one (sweep point, replication) job for every scheme.
#[allow(clippy::too_many_arguments)]
fn run_job(
    cfg: &RunConfig,
    scenario: &ScenarioState,
    label: &str,
    point: u64,
    replication: u64,
    started: Instant,
) -> Result<JobOutput, HarnessError> {
    let spec = &cfg.experiment;
    let total = (spec.episodes * spec.slots_per_episode) as u64;
    let job = [point, replication];
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut truncated = false;
    let mut checkpoint = None;
    for &scheme in &spec.schemes {
        let mut env = SlotEnv::new(scenario.clone(), spec.seed, point, replication);
        let mut state = SchemeState::new(scheme, &cfg.learner, scenario, spec.seed, &job, total)?;
        let mut winner = rng::stream(spec.seed, &[tag::WINNER, point, replication, scheme.id()]);
        for episode in 0..spec.episodes {
            if spec.time_budget_s > 0.0 && started.elapsed().as_secs_f64() > spec.time_budget_s {
                truncated = true;
                break;
            }
            let mut acc = metrics::EpisodeAccumulator::default();
            for slot in 0..spec.slots_per_episode {
                let out = run_slot(
                    &mut env,
                    &mut state,
                    &mut winner,
                    spec.rounds_per_ue,
                    cfg.learner.infeasible_penalty,
                )?;
                if replication == 0 && slot == 0 {
                    traces.extend(out.trace.iter().map(|t| TraceRecord::new(scheme, label, episode, t)));
                }
                acc.add(&out);
            }
            let explore = match &state {
                SchemeState::Ddqn(a) => a.explore_rate(),
                _ => 0.0,
            };
            rows.push(acc.finish(MetricsRecord {
                episode,
                scheme: scheme.name().to_string(),
                sweep_axis: spec.sweep.axis_name().to_string(),
                sweep_value: label.to_string(),
                replication: replication as usize,
                seed: spec.seed,
                explore_rate: explore,
                ..Default::default()
            }));
        }
        if let SchemeState::Ddqn(agent) = &state {
            checkpoint = Some(agent.learner.checkpoint(agent.codec.levels));
        }
    }
    Ok(JobOutput {
        rows,
        traces,
        truncated,
        checkpoint,
    })
}

struct JobOutput {
    rows: Vec<MetricsRecord>,
    traces: Vec<TraceRecord>,
    truncated: bool,
    checkpoint: Option<Checkpoint>,
}

/// Scenario used at a sweep point when none is supplied.
pub fn scenario_for(cfg: &SystemConfig) -> Result<ScenarioState, HarnessError> {
    Ok(generate_scenario(cfg, cfg.rng_seed)?)
}

/// Runs every (sweep point, replication, scheme). With `fixed` set, that
/// scenario is used instead of generating one (sweep axis must be none).
pub fn run_experiment(cfg: &RunConfig, fixed: Option<&ScenarioState>) -> Result<Dataset, HarnessError> {
    cfg.validate()?;
    let spec = &cfg.experiment;
    let points = spec.sweep.points(&cfg.system);
    if fixed.is_some() && points.len() != 1 {
        return Err(HarnessError::Spec(
            "a fixed scenario cannot be combined with a sweep".into(),
        ));
    }
    let mut jobs = Vec::new();
    for (p, (label, sys)) in points.iter().enumerate() {
        let scenario = match fixed {
            Some(s) => {
                s.check()?;
                s.clone()
            }
            None => scenario_for(sys)?,
        };
        for r in 0..spec.replications {
            jobs.push((p as u64, r as u64, label.clone(), scenario.clone()));
        }
    }
    let started = Instant::now();
    let run = |(p, r, label, scn): &(u64, u64, String, ScenarioState)| run_job(cfg, scn, label, *p, *r, started);

    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = jobs.iter().map(run).collect();

    let mut data = Dataset::default();
    for (job, res) in jobs.iter().zip(results) {
        let out = res?;
        data.rows.extend(out.rows);
        data.traces.extend(out.traces);
        data.truncated |= out.truncated;
        if job.0 == 0 && job.1 == 0 {
            data.checkpoint = out.checkpoint;
        }
    }
    let order = |s: &str| s.parse::<Scheme>().map(Scheme::id).unwrap_or(u64::MAX);
    let point_of = |label: &str| points.iter().position(|(l, _)| l == label).unwrap_or(usize::MAX);
    data.rows.sort_by(|a, b| {
        (point_of(&a.sweep_value), order(&a.scheme), a.replication, a.episode).cmp(&(
            point_of(&b.sweep_value),
            order(&b.scheme),
            b.replication,
            b.episode,
        ))
    });
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> RunConfig {
        RunConfig {
            experiment: ExperimentSpec {
                episodes: 2,
                slots_per_episode: 5,
                replications: 1,
                ..Default::default()
            },
            learner: LearnerConfig {
                hidden: vec![16, 16],
                batch_size: 4,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    fn job_state(cfg: &RunConfig, scheme: Scheme) -> (SlotEnv, SchemeState, SimRng) {
        let scn = scenario_for(&cfg.system).unwrap();
        let env = SlotEnv::new(scn.clone(), 3, 0, 0);
        let state = SchemeState::new(scheme, &cfg.learner, &scn, 3, &[0, 0], 10).unwrap();
        (env, state, rng::stream(3, &[tag::WINNER]))
    }

    #[test]
    fn mec_never_touches_cns() {
        let cfg = quick();
        let (mut env, mut state, mut w) = job_state(&cfg, Scheme::Mec);
        for _ in 0..20 {
            let out = run_slot(&mut env, &mut state, &mut w, 50, -10.0).unwrap();
            assert!(out.profile.decisions.iter().all(|d| d.cn().is_none()));
            assert!(out.plan.ratios_cn.iter().flatten().all(|&x| x == 0.0));
            assert_eq!(out.violations, 0);
        }
    }

    #[test]
    fn ddqn_slot_appends_one_transition_with_the_logged_reward() {
        let cfg = quick();
        let (mut env, mut state, mut w) = job_state(&cfg, Scheme::DdqnEpg);
        for i in 1..=8 {
            let out = run_slot(&mut env, &mut state, &mut w, 50, -10.0).unwrap();
            let SchemeState::Ddqn(agent) = &state else {
                unreachable!()
            };
            assert_eq!(agent.learner.replay().len(), i);
            let stored = agent.learner.replay().last().unwrap();

            let active: Vec<bool> = out.requests.iter().map(|&r| r > 0).collect();
            let game = SlotGame::new(&env.scenario, &out.uplink_bps, &out.orra).unwrap();
            let full = SlotGame::new(&env.scenario, &out.uplink_bps, &Orra::full_offload(&active)).unwrap();
            let (parts, total) = compute_reward(&game, &out.profile, &full, -10.0);
            assert_eq!(stored.reward, total);
            assert_eq!(stored.head_rewards, parts);
            assert_eq!(out.reward, total);
        }
    }

    #[test]
    fn full_offload_choice_has_zero_reward() {
        let mut cfg = quick();
        cfg.system.deadline_s = 100.0;
        let mut scn = scenario_for(&cfg.system).unwrap();
        scn.set_requests(&[1, 2, 3, 0, 1, 2]);
        let active: Vec<bool> = scn.requests().iter().map(|&r| r > 0).collect();
        let game = SlotGame::new(&scn, &[5e7; 6], &Orra::full_offload(&active)).unwrap();
        let all_es = StrategyProfile::new(
            active
                .iter()
                .map(|&a| if a { Decision::ES } else { Decision::Local })
                .collect(),
        );
        let (parts, total) = compute_reward(&game, &all_es, &game, -10.0);
        assert_eq!(total, 0.0);
        assert!(parts.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn missed_deadline_is_penalised() {
        let mut cfg = quick();
        cfg.system.deadline_s = 1e-4;
        let mut scn = scenario_for(&cfg.system).unwrap();
        scn.set_requests(&[1, 0, 0, 0, 0, 0]);
        let active = [true, false, false, false, false, false];
        let game = SlotGame::new(&scn, &[5e7; 6], &Orra::full_offload(&active)).unwrap();
        let local = StrategyProfile::new(vec![Decision::Local; 6]);
        let (parts, total) = compute_reward(&game, &local, &game, -10.0);
        assert_eq!(parts[0], -10.0);
        assert_eq!(total, -10.0);
    }

    #[test]
    fn epg_rand_is_reproducible() {
        let cfg = RunConfig {
            experiment: ExperimentSpec {
                schemes: vec![Scheme::EpgRand],
                ..quick().experiment
            },
            ..quick()
        };
        let csv = |d: &Dataset| {
            let mut buf = Vec::new();
            d.write_metrics(&mut buf).unwrap();
            buf
        };
        let a = run_experiment(&cfg, None).unwrap();
        let b = run_experiment(&cfg, None).unwrap();
        assert_eq!(csv(&a), csv(&b));
        assert_eq!(a.rows.len(), 2);
    }

    #[test]
    fn zero_episodes_rejected() {
        let mut cfg = quick();
        cfg.experiment.episodes = 0;
        assert!(matches!(run_experiment(&cfg, None), Err(HarnessError::Spec(_))));
    }

    #[test]
    fn sweep_points() {
        let base = SystemConfig::default();
        let pts = Sweep::ue_default().points(&base);
        assert_eq!(pts.iter().map(|p| p.1.n_ues).collect::<Vec<_>>(), vec![4, 6, 8, 10, 12]);
        assert_eq!(Sweep::cn_default().points(&base).len(), 10);
        let tasks = Sweep::task_default().points(&base);
        assert_eq!(tasks[0].1.task_suite.ranges().0, [8.0e7, 1.6e8]);
        assert_eq!(tasks[1].1.task_suite.ranges().1, [1.0e9, 2.0e9]);
        assert!(Sweep::UeCount { values: vec![13] }.validate().is_err());
    }

    #[test]
    fn config_toml_round_trip() {
        let cfg = quick();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let partial =
            RunConfig::from_toml("[system]\nn_ues = 4\n[experiment.sweep]\naxis = \"cn-count\"\nvalues = [1, 2]\n")
                .unwrap();
        assert_eq!(partial.system.n_ues, 4);
        assert_eq!(partial.experiment.sweep, Sweep::CnCount { values: vec![1, 2] });
        assert!(RunConfig::from_toml("[system]\nbogus = 1\n").is_err());
    }
}
