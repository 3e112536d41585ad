//! Network instances: tasks, compute nodes, UEs and per-slot requests.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{validate_config, ConfigError, RequestModel, SystemConfig};
use crate::rng::{self, SimRng};

const COMPLEXITY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub input_bits: f64,
    pub cycles: f64,
    pub max_latency_s: f64,
    /// Cycles per bit.
    pub complexity: f64,
}

impl TaskSpec {
    pub fn new(input_bits: f64, cycles: f64, max_latency_s: f64) -> Result<Self, ConfigError> {
        for (field, v) in [
            ("input_bits", input_bits),
            ("cycles", cycles),
            ("max_latency_s", max_latency_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::new(field, format!("must be positive, got {v}")));
            }
        }
        Ok(Self {
            input_bits,
            cycles,
            max_latency_s,
            complexity: cycles / input_bits,
        })
    }

    pub fn is_consistent(&self) -> bool {
        let c = self.complexity * self.input_bits;
        self.input_bits > 0.0
            && self.cycles > 0.0
            && self.max_latency_s > 0.0
            && (c - self.cycles).abs() <= COMPLEXITY_RTOL * self.cycles
    }

    pub fn gigacycles(&self) -> f64 {
        self.cycles / crate::config::CYCLES_PER_GIGACYCLE
    }
}

/// Task types `1..=F`; request index 0 means "no task this slot".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskCatalog {
    tasks: Vec<TaskSpec>,
}

impl TaskCatalog {
    pub fn new(tasks: Vec<TaskSpec>) -> Result<Self, ConfigError> {
        if tasks.is_empty() {
            return Err(ConfigError::new("n_task_types", "catalog needs at least one task"));
        }
        for (i, t) in tasks.iter().enumerate() {
            if tasks[..i].contains(t) {
                return Err(ConfigError::new(
                    "tasks",
                    format!("task {} duplicates an earlier entry", i + 1),
                ));
            }
        }
        Ok(Self { tasks })
    }

    /// Number of task types `F`.
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn get(&self, request: usize) -> Option<&TaskSpec> {
        request.checked_sub(1).and_then(|i| self.tasks.get(i))
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeKind {
    Es,
    Cn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeNode {
    pub kind: NodeKind,
    pub capacity_hz: f64,
    pub twin_deviation_hz: f64,
    pub cost_per_gigacycle: f64,
}

impl ComputeNode {
    pub fn effective_rate_hz(&self) -> f64 {
        self.capacity_hz - self.twin_deviation_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeState {
    pub position_m: [f64; 2],
    pub tx_power_w: f64,
    pub local_rate_hz: f64,
    pub current_request: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioState {
    pub config: SystemConfig,
    pub ap_position_m: [f64; 2],
    pub ues: Vec<UeState>,
    /// Node 0 is the ES, nodes `1..=K` are CNs.
    pub nodes: Vec<ComputeNode>,
    pub catalog: TaskCatalog,
    pub slot: u64,
}

impl ScenarioState {
    pub fn n_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn n_cns(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn es(&self) -> &ComputeNode {
        &self.nodes[0]
    }

    /// UE-AP distance, clamped below by `min_distance_m`.
    pub fn distance_m(&self, ue: usize) -> f64 {
        let [x, y] = self.ues[ue].position_m;
        let [ax, ay] = self.ap_position_m;
        (x - ax).hypot(y - ay).max(self.config.min_distance_m)
    }

    pub fn requests(&self) -> Vec<usize> {
        self.ues.iter().map(|u| u.current_request).collect()
    }

    pub fn set_requests(&mut self, requests: &[usize]) {
        for (ue, &r) in self.ues.iter_mut().zip(requests) {
            ue.current_request = r;
        }
    }

    /// Task requested by `ue` in the current slot, if any.
    pub fn task_of(&self, ue: usize) -> Option<&TaskSpec> {
        self.catalog.get(self.ues[ue].current_request)
    }

    /// Structural checks used after deserialising a dump.
    pub fn check(&self) -> Result<(), ConfigError> {
        validate_config(&self.config)?;
        if self.nodes.first().map(|n| n.kind) != Some(NodeKind::Es) {
            return Err(ConfigError::new("nodes", "node 0 must be the ES"));
        }
        if self.nodes.iter().filter(|n| n.kind == NodeKind::Es).count() != 1 {
            return Err(ConfigError::new("nodes", "exactly one ES is required"));
        }
        for n in &self.nodes {
            if !(n.capacity_hz > n.twin_deviation_hz && n.twin_deviation_hz >= 0.0) {
                return Err(ConfigError::new("nodes", "twin deviation must lie in [0, capacity)"));
            }
            if !(n.cost_per_gigacycle >= 0.0) {
                return Err(ConfigError::new("nodes", "negative price"));
            }
        }
        if self.ues.is_empty() {
            return Err(ConfigError::new("ues", "no UEs"));
        }
        let side = self.config.arena_m;
        for u in &self.ues {
            let [x, y] = u.position_m;
            if !(0.0..=side).contains(&x) || !(0.0..=side).contains(&y) {
                return Err(ConfigError::new("ues", "UE outside the arena"));
            }
            if u.current_request > self.catalog.len() {
                return Err(ConfigError::new("ues", "request index outside the catalog"));
            }
        }
        if !self.catalog.tasks().iter().all(TaskSpec::is_consistent) {
            return Err(ConfigError::new("catalog", "inconsistent task"));
        }
        Ok(())
    }
}

/// Splits a physical rate into `(f, f_dev)` with `f_dev = pct% of f`.
pub fn twin_estimate(actual_hz: f64, deviation_pct: f64) -> Result<(f64, f64), ConfigError> {
    if !(0.0..100.0).contains(&deviation_pct) {
        return Err(ConfigError::new(
            "twin_deviation_pct",
            format!("must lie in [0, 100), got {deviation_pct}"),
        ));
    }
    if !(actual_hz.is_finite() && actual_hz > 0.0) {
        return Err(ConfigError::new("capacity_hz", "must be positive"));
    }
    Ok((actual_hz, deviation_pct / 100.0 * actual_hz))
}

fn uniform_in(rng: &mut SimRng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Seeded network instance. Pure in `(cfg, seed)`.
pub fn generate_scenario(cfg: &SystemConfig, seed: u64) -> Result<ScenarioState, ConfigError> {
    let cfg = validate_config(cfg)?;
    let mut rng = rng::stream(seed, &[rng::tag::SCENARIO]);
    let side = cfg.arena_m;

    let ues = (0..cfg.n_ues)
        .map(|_| UeState {
            position_m: [rng.random_range(0.0..=side), rng.random_range(0.0..=side)],
            tx_power_w: cfg.tx_power_w,
            local_rate_hz: cfg.local_rate_hz,
            current_request: 0,
        })
        .collect();

    let mut nodes = Vec::with_capacity(cfg.n_cns + 1);
    let (es_f, es_dev) = twin_estimate(cfg.es_capacity_hz, cfg.twin_deviation_pct)?;
    nodes.push(ComputeNode {
        kind: NodeKind::Es,
        capacity_hz: es_f,
        twin_deviation_hz: es_dev,
        cost_per_gigacycle: cfg.price_per_gigacycle(es_f),
    });
    for _ in 0..cfg.n_cns {
        let (f, dev) = twin_estimate(uniform_in(&mut rng, cfg.cn_capacity_range_hz), cfg.twin_deviation_pct)?;
        nodes.push(ComputeNode {
            kind: NodeKind::Cn,
            capacity_hz: f,
            twin_deviation_hz: dev,
            cost_per_gigacycle: cfg.price_per_gigacycle(f),
        });
    }

    let (bits, cycles) = cfg.task_suite.ranges();
    let mut tasks: Vec<TaskSpec> = Vec::with_capacity(cfg.n_task_types);
    while tasks.len() < cfg.n_task_types {
        let t = TaskSpec::new(uniform_in(&mut rng, bits), uniform_in(&mut rng, cycles), cfg.deadline_s)?;
        if !tasks.contains(&t) {
            tasks.push(t);
        }
    }
    let catalog = TaskCatalog::new(tasks)?;

    Ok(ScenarioState {
        config: cfg,
        ap_position_m: [side / 2.0, side / 2.0],
        ues,
        nodes,
        catalog,
        slot: 0,
    })
}

/// Draws the next request vector `mu_t` in `{0..=F}^M`.
pub fn sample_requests(model: RequestModel, n_tasks: usize, previous: &[usize], rng: &mut SimRng) -> Vec<usize> {
    previous
        .iter()
        .map(|&prev| match model {
            RequestModel::Uniform => rng.random_range(0..=n_tasks),
            RequestModel::Forced => rng.random_range(1..=n_tasks),
            RequestModel::Markov { stay } => {
                if rng.random_bool(stay) {
                    prev
                } else {
                    rng.random_range(0..=n_tasks)
                }
            }
        })
        .collect()
}
