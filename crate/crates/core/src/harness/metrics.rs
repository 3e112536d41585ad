//! Per-episode metrics, CSV I/O and aggregation across replications.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{HarnessError, Scheme, SlotOutcome};
use crate::game::{Decision, TraceRow};
use crate::orra::learner::Checkpoint;

/// Line appended to a metrics CSV cut short by the wall-clock budget.
pub const TRUNCATION_MARKER: &str = "# truncated: wall-clock budget exhausted";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: usize,
    pub scheme: String,
    pub sweep_axis: String,
    pub sweep_value: String,
    pub replication: usize,
    pub seed: u64,
    pub slots: usize,
    pub mean_system_utility: f64,
    pub mean_reward: f64,
    pub mean_latency_s: f64,
    pub mean_rounds: f64,
    pub non_converged: usize,
    pub constraint_violations: usize,
    pub deadline_misses: usize,
    pub active_tasks: usize,
    pub local_runs: usize,
    pub es_runs: usize,
    pub cn_runs: usize,
    /// Mean training loss; NaN when no update happened.
    pub mean_loss: f64,
    pub explore_rate: f64,
}

#[derive(Debug, Default)]
pub(crate) struct EpisodeAccumulator {
    slots: usize,
    utility: f64,
    reward: f64,
    latency: f64,
    rounds: f64,
    non_converged: usize,
    violations: usize,
    misses: usize,
    active: usize,
    local: usize,
    es: usize,
    cn: usize,
    loss: f64,
    losses: usize,
}

impl EpisodeAccumulator {
    pub(crate) fn add(&mut self, out: &SlotOutcome) {
        self.slots += 1;
        self.utility += out.system_utility;
        self.reward += out.reward;
        self.latency += out.mean_latency_s;
        self.rounds += out.rounds as f64;
        self.non_converged += usize::from(!out.converged);
        self.violations += out.violations;
        self.misses += out.deadline_misses;
        for (ue, d) in out.profile.decisions.iter().enumerate() {
            if out.requests[ue] == 0 {
                continue;
            }
            self.active += 1;
            match d {
                Decision::Local => self.local += 1,
                Decision::Node(0) => self.es += 1,
                Decision::Node(_) => self.cn += 1,
            }
        }
        if let Some(l) = out.loss {
            self.loss += l;
            self.losses += 1;
        }
    }

    pub(crate) fn finish(self, base: MetricsRecord) -> MetricsRecord {
        let n = self.slots.max(1) as f64;
        MetricsRecord {
            slots: self.slots,
            mean_system_utility: self.utility / n,
            mean_reward: self.reward / n,
            mean_latency_s: self.latency / n,
            mean_rounds: self.rounds / n,
            non_converged: self.non_converged,
            constraint_violations: self.violations,
            deadline_misses: self.misses,
            active_tasks: self.active,
            local_runs: self.local,
            es_runs: self.es,
            cn_runs: self.cn,
            mean_loss: if self.losses > 0 {
                self.loss / self.losses as f64
            } else {
                f64::NAN
            },
            ..base
        }
    }
}

/// One accepted PCO update, tagged with where it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub scheme: String,
    pub sweep_value: String,
    pub episode: usize,
    pub round: usize,
    pub ue: usize,
    pub old: String,
    pub new: String,
    pub u_before: f64,
    pub u_after: f64,
    pub phi: f64,
    pub system_utility: f64,
}

impl TraceRecord {
    pub fn new(scheme: Scheme, sweep_value: &str, episode: usize, t: &TraceRow) -> Self {
        Self {
            scheme: scheme.name().to_string(),
            sweep_value: sweep_value.to_string(),
            episode,
            round: t.round,
            ue: t.ue,
            old: t.old.clone(),
            new: t.new.clone(),
            u_before: t.u_before,
            u_after: t.u_after,
            phi: t.phi,
            system_utility: t.system_utility,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub rows: Vec<MetricsRecord>,
    pub traces: Vec<TraceRecord>,
    pub truncated: bool,
    /// Learner of the first sweep point's first replication.
    pub checkpoint: Option<Checkpoint>,
}

impl Dataset {
    pub fn write_metrics<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record(metrics_header())?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        let mut inner = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
        if self.truncated {
            writeln!(inner, "{TRUNCATION_MARKER}")?;
        }
        Ok(())
    }

    pub fn write_traces<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.traces {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a metrics CSV; the truncation marker is recognised.
    pub fn read_metrics<R: Read>(mut input: R) -> Result<Self, HarnessError> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let truncated = text.lines().any(|l| l.trim() == TRUNCATION_MARKER);
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let rows = rd.deserialize().collect::<Result<Vec<MetricsRecord>, _>>()?;
        Ok(Self {
            rows,
            traces: Vec::new(),
            truncated,
            checkpoint: None,
        })
    }
}

fn metrics_header() -> Vec<&'static str> {
    vec![
        "episode",
        "scheme",
        "sweep_axis",
        "sweep_value",
        "replication",
        "seed",
        "slots",
        "mean_system_utility",
        "mean_reward",
        "mean_latency_s",
        "mean_rounds",
        "non_converged",
        "constraint_violations",
        "deadline_misses",
        "active_tasks",
        "local_runs",
        "es_runs",
        "cn_runs",
        "mean_loss",
        "explore_rate",
    ]
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Relative improvement of `ours` over `baseline` in percent; `None` when
/// the baseline is zero.
pub fn improvement_pct(ours: f64, baseline: f64) -> Option<f64> {
    (baseline != 0.0).then(|| (ours - baseline) / baseline.abs() * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: String,
    pub sweep_value: String,
    pub replications: usize,
    pub utility_mean: f64,
    pub utility_std: f64,
    pub latency_mean_s: f64,
    pub latency_std_s: f64,
    pub reward_mean: f64,
    pub rounds_mean: f64,
    pub constraint_violations: usize,
    pub deadline_misses: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub sweep_value: String,
    pub baseline: String,
    pub improvement_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tail_episodes: usize,
    pub truncated: bool,
    pub rows: Vec<SummaryRow>,
    pub improvements: Vec<Improvement>,
}

impl Summary {
    pub fn row(&self, scheme: &str, sweep_value: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.sweep_value == sweep_value)
    }
}

/// Summarises a dataset. Each replication contributes the mean over its
/// last `tail` episodes (all episodes when `tail` is 0).
pub fn aggregate(data: &Dataset, tail: usize) -> Summary {
    // (sweep position, scheme) -> replication -> episode rows
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<(usize, String), BTreeMap<usize, Vec<&MetricsRecord>>> = BTreeMap::new();
    for r in &data.rows {
        let pos = order.iter().position(|v| *v == r.sweep_value).unwrap_or_else(|| {
            order.push(r.sweep_value.clone());
            order.len() - 1
        });
        groups
            .entry((pos, r.scheme.clone()))
            .or_default()
            .entry(r.replication)
            .or_default()
            .push(r);
    }

    let mut rows = Vec::new();
    for ((pos, scheme), reps) in &groups {
        let mut util = Vec::new();
        let mut lat = Vec::new();
        let mut reward = Vec::new();
        let mut rounds = Vec::new();
        let mut violations = 0;
        let mut misses = 0;
        for eps in reps.values() {
            let mut eps = eps.clone();
            eps.sort_by_key(|r| r.episode);
            let take = if tail == 0 { eps.len() } else { tail.min(eps.len()) };
            let window = &eps[eps.len() - take..];
            let avg = |f: fn(&MetricsRecord) -> f64| window.iter().map(|r| f(r)).sum::<f64>() / take as f64;
            util.push(avg(|r| r.mean_system_utility));
            lat.push(avg(|r| r.mean_latency_s));
            reward.push(avg(|r| r.mean_reward));
            rounds.push(avg(|r| r.mean_rounds));
            violations += window.iter().map(|r| r.constraint_violations).sum::<usize>();
            misses += window.iter().map(|r| r.deadline_misses).sum::<usize>();
        }
        let (um, us) = mean_std(&util);
        let (lm, ls) = mean_std(&lat);
        rows.push(SummaryRow {
            scheme: scheme.clone(),
            sweep_value: order[*pos].clone(),
            replications: reps.len(),
            utility_mean: um,
            utility_std: us,
            latency_mean_s: lm,
            latency_std_s: ls,
            reward_mean: mean_std(&reward).0,
            rounds_mean: mean_std(&rounds).0,
            constraint_violations: violations,
            deadline_misses: misses,
        });
    }
    rows.sort_by_key(|r| {
        (
            order.iter().position(|v| *v == r.sweep_value),
            r.scheme.parse::<Scheme>().ok(),
        )
    });

    let mut improvements = Vec::new();
    let ours = Scheme::DdqnEpg.name();
    for value in &order {
        let Some(d) = rows.iter().find(|r| r.scheme == ours && r.sweep_value == *value) else {
            continue;
        };
        for b in rows.iter().filter(|r| r.scheme != ours && r.sweep_value == *value) {
            improvements.push(Improvement {
                sweep_value: value.clone(),
                baseline: b.scheme.clone(),
                improvement_pct: improvement_pct(d.utility_mean, b.utility_mean),
            });
        }
    }

    Summary {
        tail_episodes: tail,
        truncated: data.truncated,
        rows,
        improvements,
    }
}
