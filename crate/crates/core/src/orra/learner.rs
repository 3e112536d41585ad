//! Double-DQN with factorised per-UE heads.
//!
//! The online network maps a flattened state to `heads x actions` values.
//! The bootstrap target of head `h` picks its action with the online
//! network and evaluates it with the target network:
//! `y_h = r_h + discount * Q_target_h(s', argmax_a Q_online_h(s', a))`.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::net::{Adam, Mlp};
use super::replay::{ReplayBuffer, Transition};
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub hidden: Vec<usize>,
    pub replay_capacity: usize,
    pub discount: f64,
    pub learn_rate: f64,
    pub batch_size: usize,
    /// Train steps between target syncs.
    pub target_sync: u64,
    pub explore_start: f64,
    pub explore_end: f64,
    /// Fraction of training over which exploration decays linearly.
    pub explore_fraction: f64,
    /// Grid points per ratio / share.
    pub levels: usize,
    /// Reward of a UE whose task misses its deadline.
    pub infeasible_penalty: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            replay_capacity: 10_000,
            discount: 0.9,
            learn_rate: 1e-3,
            batch_size: 64,
            target_sync: 200,
            explore_start: 1.0,
            explore_end: 0.05,
            explore_fraction: 0.8,
            levels: 11,
            infeasible_penalty: -10.0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), crate::ConfigError> {
        use crate::ConfigError as E;
        if !(0.0..1.0).contains(&self.discount) {
            return Err(E::new("discount", "must lie in [0, 1)"));
        }
        if self.hidden.contains(&0) {
            return Err(E::new("hidden", "layer widths must be positive"));
        }
        if self.replay_capacity == 0 || self.batch_size == 0 {
            return Err(E::new("batch_size", "replay capacity and batch size must be positive"));
        }
        if self.target_sync == 0 {
            return Err(E::new("target_sync", "must be positive"));
        }
        if !(self.learn_rate > 0.0) {
            return Err(E::new("learn_rate", "must be positive"));
        }
        if self.levels < 2 {
            return Err(E::new("levels", "need at least two grid points"));
        }
        for (f, v) in [
            ("explore_start", self.explore_start),
            ("explore_end", self.explore_end),
            ("explore_fraction", self.explore_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(E::new(f, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Linear decay from `explore_start` to `explore_end` over the first
    /// `explore_fraction` of `total` steps.
    pub fn explore_rate(&self, step: u64, total: u64) -> f64 {
        let horizon = self.explore_fraction * total as f64;
        if horizon <= 0.0 || step as f64 >= horizon {
            return self.explore_end;
        }
        let frac = step as f64 / horizon;
        self.explore_start + frac * (self.explore_end - self.explore_start)
    }
}

/// Serialised learner parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub layer_sizes: Vec<usize>,
    pub heads: usize,
    pub actions_per_head: usize,
    pub codec_levels: usize,
    pub train_steps: u64,
    pub target_syncs: u64,
    pub online: Vec<f64>,
    pub target: Vec<f64>,
}

pub const CHECKPOINT_FORMAT: &str = "coinmec-ddqn-v1";

#[derive(Debug, Clone)]
pub struct QLearner {
    cfg: LearnerConfig,
    heads: usize,
    actions: usize,
    online: Mlp,
    target: Mlp,
    opt: Adam,
    replay: ReplayBuffer,
    rng: SimRng,
    train_steps: u64,
    target_syncs: u64,
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl QLearner {
    pub fn new(cfg: LearnerConfig, input_dim: usize, heads: usize, actions: usize, seed: u64) -> Self {
        let mut sizes = vec![input_dim];
        sizes.extend(&cfg.hidden);
        sizes.push(heads * actions);
        let online = Mlp::new(&sizes, &mut rng::stream(seed, &[rng::tag::LEARNER]));
        let n = online.params().len();
        Self {
            heads,
            actions,
            target: online.clone(),
            opt: Adam::new(n, cfg.learn_rate),
            replay: ReplayBuffer::new(cfg.replay_capacity),
            rng: rng::stream(seed, &[rng::tag::REPLAY]),
            online,
            cfg,
            train_steps: 0,
            target_syncs: 0,
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn actions_per_head(&self) -> usize {
        self.actions
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn target_syncs(&self) -> u64 {
        self.target_syncs
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn online(&self) -> &Mlp {
        &self.online
    }

    pub fn online_mut(&mut self) -> &mut Mlp {
        &mut self.online
    }

    pub fn q_values(&self, state: &[f64]) -> Vec<f64> {
        self.online.forward(state)
    }

    pub fn target_q_values(&self, state: &[f64]) -> Vec<f64> {
        self.target.forward(state)
    }

    /// Per-head epsilon-greedy; greedy ties go to the lowest index.
    pub fn select_action(&self, state: &[f64], rng: &mut SimRng, explore_rate: f64) -> Vec<usize> {
        let q = self.online.forward(state);
        q.chunks(self.actions)
            .map(|head| {
                if explore_rate > 0.0 && rng.random_bool(explore_rate.min(1.0)) {
                    rng.random_range(0..self.actions)
                } else {
                    argmax(head)
                }
            })
            .collect()
    }

    pub fn remember(&mut self, t: Transition) {
        self.replay.push(t);
    }

    /// Samples a batch and trains on it; syncs the target every
    /// `target_sync` steps. Returns `None` until the replay holds a batch.
    pub fn train_step(&mut self) -> Option<f64> {
        if self.replay.is_empty() {
            warn!("train_step on empty replay memory");
            return None;
        }
        if self.replay.len() < self.cfg.batch_size {
            return None;
        }
        let mut rng = self.rng.clone();
        let batch: Vec<Transition> = self
            .replay
            .sample(self.cfg.batch_size, &mut rng)
            .into_iter()
            .cloned()
            .collect();
        self.rng = rng;
        let refs: Vec<&Transition> = batch.iter().collect();
        let loss = self.train_on(&refs);
        if self.train_steps.is_multiple_of(self.cfg.target_sync) {
            self.update_target();
        }
        Some(loss)
    }

    /// Double-DQN targets for one transition, one per head.
    pub fn targets(&self, t: &Transition) -> Vec<f64> {
        if t.terminal {
            return t.head_rewards.clone();
        }
        let next_online = self.online.forward(&t.next_state);
        let acts = self.target.hidden(&t.next_state);
        (0..self.heads)
            .map(|h| {
                let a = argmax(&next_online[h * self.actions..(h + 1) * self.actions]);
                t.head_rewards[h] + self.cfg.discount * self.target.output_at(&acts, h * self.actions + a)
            })
            .collect()
    }

    /// One Adam step on the mean squared TD error over `batch x heads`.
    pub fn train_on(&mut self, batch: &[&Transition]) -> f64 {
        let mut grad = vec![0.0; self.online.params().len()];
        let scale = 1.0 / (batch.len() * self.heads) as f64;
        let mut loss = 0.0;
        for t in batch {
            let y = self.targets(t);
            let acts = self.online.hidden(&t.state);
            let out_grads: Vec<(usize, f64)> = (0..self.heads)
                .map(|h| {
                    let idx = h * self.actions + t.actions[h];
                    let err = self.online.output_at(&acts, idx) - y[h];
                    loss += err * err * scale;
                    (idx, 2.0 * err * scale)
                })
                .collect();
            self.online.backward(&acts, &out_grads, &mut grad);
        }
        self.opt.step(self.online.params_mut(), &grad);
        self.train_steps += 1;
        loss
    }

    /// Mean squared TD error of a batch without updating anything.
    pub fn loss(&self, batch: &[&Transition]) -> f64 {
        let scale = 1.0 / (batch.len() * self.heads) as f64;
        batch
            .iter()
            .map(|t| {
                let y = self.targets(t);
                let q = self.online.forward(&t.state);
                (0..self.heads)
                    .map(|h| (q[h * self.actions + t.actions[h]] - y[h]).powi(2) * scale)
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn update_target(&mut self) {
        self.target = self.online.clone();
        self.target_syncs += 1;
    }

    pub fn checkpoint(&self, codec_levels: usize) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            layer_sizes: self.online.sizes().to_vec(),
            heads: self.heads,
            actions_per_head: self.actions,
            codec_levels,
            train_steps: self.train_steps,
            target_syncs: self.target_syncs,
            online: self.online.params().to_vec(),
            target: self.target.params().to_vec(),
        }
    }

    /// Restores network parameters and counters; the replay memory and
    /// optimiser state start fresh.
    pub fn restore(&mut self, ck: &Checkpoint) -> Result<(), String> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(format!("unknown checkpoint format {}", ck.format));
        }
        if ck.layer_sizes != self.online.sizes() || ck.heads != self.heads || ck.actions_per_head != self.actions {
            return Err("checkpoint shape does not match the learner".into());
        }
        self.online = Mlp::from_params(&ck.layer_sizes, ck.online.clone()).ok_or("bad online parameter count")?;
        self.target = Mlp::from_params(&ck.layer_sizes, ck.target.clone()).ok_or("bad target parameter count")?;
        self.train_steps = ck.train_steps;
        self.target_syncs = ck.target_syncs;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> LearnerConfig {
        LearnerConfig {
            hidden: vec![16, 16],
            batch_size: 8,
            ..Default::default()
        }
    }

    fn transition(terminal: bool) -> Transition {
        Transition {
            state: vec![1.0, 0.0, 0.0],
            actions: vec![1, 0],
            head_rewards: vec![0.5, -0.25],
            reward: 0.25,
            next_state: vec![0.0, 1.0, 0.0],
            terminal,
        }
    }

    #[test]
    fn terminal_targets_are_rewards() {
        let l = QLearner::new(small_cfg(), 3, 2, 4, 1);
        assert_eq!(l.targets(&transition(true)), vec![0.5, -0.25]);
    }

    #[test]
    fn greedy_follows_hand_set_weights() {
        // no hidden layer: outputs are the biases
        let cfg = LearnerConfig {
            hidden: vec![],
            ..small_cfg()
        };
        let mut l = QLearner::new(cfg, 2, 1, 3, 0);
        let p = l.online_mut().params_mut();
        p.iter_mut().for_each(|x| *x = 0.0);
        p[6 + 2] = 1.0;
        let a = l.select_action(&[1.0, 0.0], &mut rng::stream(0, &[]), 0.0);
        assert_eq!(a, vec![2]);
    }

    #[test]
    fn greedy_ties_go_to_lowest_index() {
        let cfg = LearnerConfig {
            hidden: vec![],
            ..small_cfg()
        };
        let mut l = QLearner::new(cfg, 2, 2, 3, 0);
        l.online_mut().params_mut().iter_mut().for_each(|x| *x = 0.0);
        assert_eq!(l.select_action(&[1.0, 1.0], &mut rng::stream(0, &[]), 0.0), vec![0, 0]);
    }

    #[test]
    fn exploration_is_uniform_and_reproducible() {
        let l = QLearner::new(small_cfg(), 3, 1, 5, 2);
        let mut r = rng::stream(5, &[]);
        let draws = 10_000;
        let mut counts = [0usize; 5];
        for _ in 0..draws {
            counts[l.select_action(&[0.0, 1.0, 0.0], &mut r, 1.0)[0]] += 1;
        }
        let expected = draws as f64 / 5.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99.9% quantile, 4 degrees of freedom
        assert!(chi2 < 18.47, "{counts:?}");

        let run = |seed| {
            let mut r = rng::stream(seed, &[]);
            (0..20)
                .map(|_| l.select_action(&[1.0, 0.0, 0.0], &mut r, 0.5))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }

    #[test]
    fn target_sync_copies_and_freezes() {
        let mut l = QLearner::new(small_cfg(), 3, 2, 4, 3);
        let t = transition(false);
        for _ in 0..10 {
            l.train_on(&[&t]);
        }
        let probe = [0.2, 0.7, 1.0];
        assert_ne!(l.q_values(&probe), l.target_q_values(&probe));
        l.update_target();
        assert_eq!(l.q_values(&probe), l.target_q_values(&probe));
        let frozen = l.target_q_values(&probe);
        for _ in 0..10 {
            l.train_on(&[&t]);
        }
        assert_eq!(l.target_q_values(&probe), frozen);
        assert_ne!(l.q_values(&probe), frozen);
    }

    #[test]
    fn sync_count_follows_period() {
        let cfg = LearnerConfig {
            target_sync: 7,
            ..small_cfg()
        };
        let mut l = QLearner::new(cfg, 3, 2, 4, 4);
        for i in 0..20 {
            let mut t = transition(i % 3 == 0);
            t.head_rewards = vec![i as f64 * 0.1, 0.0];
            l.remember(t);
        }
        let steps = 45;
        for _ in 0..steps {
            l.train_step().unwrap();
        }
        assert_eq!(l.train_steps(), steps);
        assert_eq!(l.target_syncs(), steps / 7);
    }

    #[test]
    fn empty_replay_is_a_noop() {
        let mut l = QLearner::new(small_cfg(), 3, 2, 4, 4);
        assert!(l.train_step().is_none());
        assert_eq!(l.train_steps(), 0);
    }

    #[test]
    fn overfitting_one_transition_lowers_the_loss_monotonically() {
        let cfg = LearnerConfig {
            learn_rate: 1e-4,
            ..Default::default()
        };
        let mut l = QLearner::new(cfg, 3, 2, 4, 6);
        let t = Transition {
            head_rewards: vec![5.0, -4.0],
            reward: 1.0,
            ..transition(true)
        };
        let mut prev = l.loss(&[&t]);
        for _ in 0..100 {
            l.train_on(&[&t]);
            let now = l.loss(&[&t]);
            assert!(now < prev, "{now} >= {prev}");
            prev = now;
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut l = QLearner::new(small_cfg(), 3, 2, 4, 7);
        l.train_on(&[&transition(false)]);
        let ck = l.checkpoint(11);
        let json = serde_json::to_string(&ck).unwrap();
        let mut fresh = QLearner::new(small_cfg(), 3, 2, 4, 99);
        fresh.restore(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(fresh.q_values(&[1.0, 0.0, 1.0]), l.q_values(&[1.0, 0.0, 1.0]));
        assert_eq!(fresh.train_steps(), 1);
    }

    #[test]
    fn explore_schedule() {
        let c = LearnerConfig::default();
        assert_eq!(c.explore_rate(0, 100), 1.0);
        assert!((c.explore_rate(40, 100) - 0.525).abs() < 1e-12);
        assert_eq!(c.explore_rate(80, 100), 0.05);
        assert_eq!(c.explore_rate(99, 100), 0.05);
    }
}
