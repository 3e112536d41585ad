//! Digital-twin latency model.
//!
//! A node observed through its twin reports rate `f` with a known deviation
//! `f_dev`; the physical rate is `f - f_dev`. Latencies are computed as the
//! twin estimate plus the estimation gap, which sums to
//! `portion * C / (f - f_dev)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::transmission_latency;
use crate::scenario::{ComputeNode, TaskSpec};

/// Tolerance on `aleph + sum(lambda) == 1`.
pub const RATIO_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatencyError {
    #[error("processing rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("twin deviation {dev} must lie in [0, {rate})")]
    DeviationOutOfRange { rate: f64, dev: f64 },
    #[error("ratio {0} outside [0, 1]")]
    RatioOutOfRange(f64),
    #[error("ratios of UE {ue} sum to {sum}, expected 1")]
    RatioSum { ue: usize, sum: f64 },
    #[error("plan has {got} UEs, expected {expected}")]
    Shape { expected: usize, got: usize },
}

fn check_ratio(r: f64) -> Result<(), LatencyError> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(LatencyError::RatioOutOfRange(r))
    }
}

fn check_rates(f: f64, dev: f64) -> Result<(), LatencyError> {
    if !(f > 0.0) {
        return Err(LatencyError::NonPositiveRate(f));
    }
    if !(dev >= 0.0 && dev < f) {
        return Err(LatencyError::DeviationOutOfRange { rate: f, dev });
    }
    Ok(())
}

/// Offloading ratios and ES shares for every UE.
///
/// `ratios_cn[m][k - 1]` is the portion of UE `m`'s task sent to CN `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffloadPlan {
    pub ratios_cn: Vec<Vec<f64>>,
    pub ratio_es: Vec<f64>,
    pub es_share: Vec<f64>,
}

impl OffloadPlan {
    /// Everything local: all ratios and shares zero.
    pub fn idle(n_ues: usize, n_cns: usize) -> Self {
        Self {
            ratios_cn: vec![vec![0.0; n_cns]; n_ues],
            ratio_es: vec![0.0; n_ues],
            es_share: vec![0.0; n_ues],
        }
    }

    pub fn n_ues(&self) -> usize {
        self.ratio_es.len()
    }

    /// Total fraction offloaded by `ue`.
    pub fn offloaded(&self, ue: usize) -> f64 {
        self.ratio_es[ue] + self.ratios_cn[ue].iter().sum::<f64>()
    }

    /// Checks the ratio and share ranges, the per-UE ratio sum (0 for local
    /// UEs, 1 otherwise) and `sum(beta) <= 1`.
    pub fn validate(&self) -> Result<(), LatencyError> {
        let m = self.n_ues();
        if self.ratios_cn.len() != m || self.es_share.len() != m {
            return Err(LatencyError::Shape {
                expected: m,
                got: self.ratios_cn.len().min(self.es_share.len()),
            });
        }
        for ue in 0..m {
            check_ratio(self.ratio_es[ue])?;
            check_ratio(self.es_share[ue])?;
            for &l in &self.ratios_cn[ue] {
                check_ratio(l)?;
            }
            let sum = self.offloaded(ue);
            if sum > RATIO_SUM_TOL && (sum - 1.0).abs() > RATIO_SUM_TOL {
                return Err(LatencyError::RatioSum { ue, sum });
            }
        }
        let shares: f64 = self.es_share.iter().sum();
        if shares > 1.0 + RATIO_SUM_TOL {
            return Err(LatencyError::RatioOutOfRange(shares));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyBreakdown {
    pub t_tx: f64,
    pub t_cn_est: f64,
    pub t_cn_gap: f64,
    pub t_cn: f64,
    pub t_es_est: f64,
    pub t_es_gap: f64,
    pub t_es: f64,
    pub t_e2e: f64,
    /// `t_e2e <= T_max`.
    pub feasible: bool,
}

/// Twin-estimated CN latency `max_k lambda_k C / f_k`.
pub fn cn_estimated_latency(lambdas: &[f64], cycles: f64, rates_hz: &[f64]) -> Result<f64, LatencyError> {
    let mut worst = 0.0f64;
    for (&l, &f) in lambdas.iter().zip(rates_hz) {
        check_ratio(l)?;
        if !(f > 0.0) {
            return Err(LatencyError::NonPositiveRate(f));
        }
        worst = worst.max(l * cycles / f);
    }
    Ok(worst)
}

/// Gap between the physical and twin-estimated CN latency:
/// `lambda C f_dev / (f (f - f_dev))`.
pub fn cn_latency_gap(lambda: f64, cycles: f64, rate_hz: f64, deviation_hz: f64) -> Result<f64, LatencyError> {
    check_ratio(lambda)?;
    check_rates(rate_hz, deviation_hz)?;
    Ok(lambda * cycles * deviation_hz / (rate_hz * (rate_hz - deviation_hz)))
}

/// ES portion latency: estimate, gap and physical total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EsLatency {
    pub est: f64,
    pub gap: f64,
    pub total: f64,
}

/// ES latency for portion `aleph` with share `beta` of capacity `es_hz`.
///
/// The effective rate is `beta * es_hz` with deviation `dev_frac` of it. A
/// zero share with a non-zero portion yields infinite latency.
pub fn es_latency(aleph: f64, cycles: f64, beta: f64, es_hz: f64, dev_frac: f64) -> Result<EsLatency, LatencyError> {
    check_ratio(aleph)?;
    check_ratio(beta)?;
    if !(es_hz > 0.0) {
        return Err(LatencyError::NonPositiveRate(es_hz));
    }
    if !(0.0..1.0).contains(&dev_frac) {
        return Err(LatencyError::DeviationOutOfRange {
            rate: 1.0,
            dev: dev_frac,
        });
    }
    if aleph == 0.0 {
        return Ok(EsLatency {
            est: 0.0,
            gap: 0.0,
            total: 0.0,
        });
    }
    if beta == 0.0 {
        return Ok(EsLatency {
            est: f64::INFINITY,
            gap: f64::INFINITY,
            total: f64::INFINITY,
        });
    }
    let f = beta * es_hz;
    let dev = dev_frac * f;
    let est = aleph * cycles / f;
    let gap = aleph * cycles * dev / (f * (f - dev));
    Ok(EsLatency {
        est,
        gap,
        total: est + gap,
    })
}

/// End-to-end latency of `ue` under `plan`.
///
/// `nodes[0]` is the ES; `uplink_bps` is the UE's URLLC rate, shared by all
/// destinations.
pub fn e2e_latency(
    plan: &OffloadPlan,
    ue: usize,
    task: &TaskSpec,
    uplink_bps: f64,
    nodes: &[ComputeNode],
) -> Result<LatencyBreakdown, LatencyError> {
    let es = &nodes[0];
    let lambdas = &plan.ratios_cn[ue];
    let aleph = plan.ratio_es[ue];

    let mut t_cn_est = 0.0;
    let mut t_cn_gap = 0.0;
    let mut t_cn = 0.0;
    for (k, &l) in lambdas.iter().enumerate() {
        let node = &nodes[k + 1];
        let est = cn_estimated_latency(&[l], task.cycles, &[node.capacity_hz])?;
        let gap = cn_latency_gap(l, task.cycles, node.capacity_hz, node.twin_deviation_hz)?;
        if est + gap > t_cn {
            t_cn_est = est;
            t_cn_gap = gap;
            t_cn = est + gap;
        }
    }

    let es_part = es_latency(
        aleph,
        task.cycles,
        plan.es_share[ue],
        es.capacity_hz,
        es.twin_deviation_hz / es.capacity_hz,
    )?;

    let mut bits: Vec<f64> = lambdas.iter().map(|l| l * task.input_bits).collect();
    bits.push(aleph * task.input_bits);
    let rates = vec![uplink_bps; bits.len()];
    let t_tx = transmission_latency(&bits, &rates);

    let t_e2e = t_cn + t_tx + es_part.total;
    Ok(LatencyBreakdown {
        t_tx,
        t_cn_est,
        t_cn_gap,
        t_cn,
        t_es_est: es_part.est,
        t_es_gap: es_part.gap,
        t_es: es_part.total,
        t_e2e,
        feasible: t_e2e <= task.max_latency_s,
    })
}

/// Latency of sending the whole task to the ES with share `beta`.
pub fn full_es_reference_latency(
    task: &TaskSpec,
    uplink_bps: f64,
    es: &ComputeNode,
    beta: f64,
) -> Result<f64, LatencyError> {
    let part = es_latency(
        1.0,
        task.cycles,
        beta,
        es.capacity_hz,
        es.twin_deviation_hz / es.capacity_hz,
    )?;
    Ok(transmission_latency(&[task.input_bits], &[uplink_bps]) + part.total)
}

/// Latency of running the whole task on the UE.
pub fn local_latency(task: &TaskSpec, local_rate_hz: f64) -> f64 {
    task.cycles / local_rate_hz
}
