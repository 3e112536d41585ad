//! Offloading ratio and resource allocation (ORRA) providers.
//!
//! An [`Orra`] assigns every UE an ES portion `aleph` (the rest goes to the
//! CN it selects, if any) and a share `beta` of the ES. Providers:
//! the Double-DQN [`learner::QLearner`] through [`ActionCodec`],
//! [`random_orra`], and the full-offload reference [`Orra::full_offload`].

pub mod learner;
pub mod net;
pub mod replay;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latency::OffloadPlan;
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrraError {
    #[error("request {request} of UE {ue} outside 0..={max}")]
    RequestOutOfRange { ue: usize, request: usize, max: usize },
    #[error("action {0} outside the codec")]
    ActionOutOfRange(usize),
    #[error("codec needs at least two levels, got {0}")]
    TooFewLevels(usize),
    #[error("expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orra {
    pub aleph: Vec<f64>,
    pub beta: Vec<f64>,
}

impl Orra {
    pub fn uniform(n_ues: usize, aleph: f64, beta: f64) -> Self {
        Self {
            aleph: vec![aleph; n_ues],
            beta: vec![beta; n_ues],
        }
    }

    /// Whole task at the ES, ES split equally among active UEs.
    pub fn full_offload(active: &[bool]) -> Self {
        let n = active.iter().filter(|&&a| a).count();
        let share = if n > 0 { 1.0 / n as f64 } else { 0.0 };
        Self {
            aleph: vec![1.0; active.len()],
            beta: active.iter().map(|&a| if a { share } else { 0.0 }).collect(),
        }
    }

    /// Zeroes idle UEs' shares and scales by `1 / max(1, sum(beta))`.
    pub fn renormalized(aleph: Vec<f64>, mut beta: Vec<f64>, active: &[bool]) -> Self {
        for (b, &a) in beta.iter_mut().zip(active) {
            if !a {
                *b = 0.0;
            }
        }
        let total: f64 = beta.iter().sum();
        if total > 1.0 {
            for b in &mut beta {
                *b /= total;
            }
        }
        Self { aleph, beta }
    }

    pub fn share_sum(&self) -> f64 {
        self.beta.iter().sum()
    }
}

/// Full-offload plan: `aleph = 1`, no CN, equal ES split among active UEs.
pub fn full_offload_plan(active: &[bool], n_cns: usize) -> OffloadPlan {
    let orra = Orra::full_offload(active);
    let mut plan = OffloadPlan::idle(active.len(), n_cns);
    for (ue, &a) in active.iter().enumerate() {
        if a {
            plan.ratio_es[ue] = 1.0;
            plan.es_share[ue] = orra.beta[ue];
        }
    }
    plan
}

/// Per-UE factorised action: a `(aleph level, beta level)` pair on a grid
/// of `levels` points in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCodec {
    pub levels: usize,
}

impl ActionCodec {
    pub fn new(levels: usize) -> Result<Self, OrraError> {
        if levels < 2 {
            return Err(OrraError::TooFewLevels(levels));
        }
        Ok(Self { levels })
    }

    /// Actions per UE head.
    pub fn actions(&self) -> usize {
        self.levels * self.levels
    }

    pub fn level_value(&self, level: usize) -> f64 {
        level as f64 / (self.levels - 1) as f64
    }

    pub fn encode(&self, aleph_level: usize, beta_level: usize) -> Result<usize, OrraError> {
        if aleph_level >= self.levels || beta_level >= self.levels {
            return Err(OrraError::ActionOutOfRange(aleph_level.max(beta_level)));
        }
        Ok(aleph_level * self.levels + beta_level)
    }

    pub fn decode(&self, action: usize) -> Result<(usize, usize), OrraError> {
        if action >= self.actions() {
            return Err(OrraError::ActionOutOfRange(action));
        }
        Ok((action / self.levels, action % self.levels))
    }

    /// Joint action to a feasible ORRA.
    pub fn decode_orra(&self, actions: &[usize], active: &[bool]) -> Result<Orra, OrraError> {
        if actions.len() != active.len() {
            return Err(OrraError::Shape {
                expected: active.len(),
                got: actions.len(),
            });
        }
        let mut aleph = Vec::with_capacity(actions.len());
        let mut beta = Vec::with_capacity(actions.len());
        for &a in actions {
            let (al, bl) = self.decode(a)?;
            aleph.push(self.level_value(al));
            beta.push(self.level_value(bl));
        }
        Ok(Orra::renormalized(aleph, beta, active))
    }
}

/// One-hot encoding of the request vector, one row of width `F + 1` per UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MdpState {
    pub width: usize,
    pub onehot: Vec<f64>,
}

impl MdpState {
    pub fn n_ues(&self) -> usize {
        self.onehot.len() / self.width
    }

    pub fn requests(&self) -> Vec<usize> {
        self.onehot
            .chunks(self.width)
            .map(|row| row.iter().position(|&x| x == 1.0).unwrap_or(0))
            .collect()
    }
}

pub fn encode_state(requests: &[usize], n_tasks: usize) -> Result<MdpState, OrraError> {
    let width = n_tasks + 1;
    let mut onehot = vec![0.0; requests.len() * width];
    for (ue, &r) in requests.iter().enumerate() {
        if r > n_tasks {
            return Err(OrraError::RequestOutOfRange {
                ue,
                request: r,
                max: n_tasks,
            });
        }
        onehot[ue * width + r] = 1.0;
    }
    Ok(MdpState { width, onehot })
}

/// Uniform grid levels for every UE, renormalised over the active ones.
pub fn random_orra(rng: &mut SimRng, active: &[bool], codec: &ActionCodec) -> Orra {
    let actions: Vec<usize> = active.iter().map(|_| rng.random_range(0..codec.actions())).collect();
    codec
        .decode_orra(&actions, active)
        .expect("sampled actions lie inside the codec")
}
