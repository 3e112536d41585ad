//! System configuration, unit conventions and validation.
//!
//! Internally everything is in bits, cycles, seconds, watts and hertz. The
//! only non-SI inputs are the noise spectral density (dBm/Hz) and the task
//! suites, whose ranges are stated in megabytes and gigacycles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bits in one (decimal) megabyte.
pub const BITS_PER_MB: f64 = 8.0e6;
/// Cycles in one gigacycle.
pub const CYCLES_PER_GIGACYCLE: f64 = 1.0e9;
/// Reference capacity used to scale per-gigacycle offloading prices.
pub const PRICE_REFERENCE_HZ: f64 = 1.0e10;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

/// How the uplink band is shared between UEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthMode {
    /// Every UE transmits over the full band `B`.
    #[default]
    Shared,
    /// Each UE gets `B / M`.
    Split,
}

/// Per-slot request process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RequestModel {
    /// Each UE draws uniformly from `0..=F` every slot (0 = idle).
    #[default]
    Uniform,
    /// Each UE draws uniformly from `1..=F`; nobody is idle.
    Forced,
    /// Keep the previous request with probability `stay`, otherwise redraw
    /// uniformly from `0..=F`.
    Markov { stay: f64 },
}

/// Task-size ranges used when the catalog is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TaskSuite {
    /// Input [1, 10] MB, [0.001, 0.1] gigacycles.
    #[default]
    Standard,
    /// Input [10, 20] MB, [0.1, 0.5] gigacycles.
    DataIntensive,
    /// Input [1, 5] MB, [1, 2] gigacycles.
    ComputeIntensive,
}

impl TaskSuite {
    /// `(input bits range, cycles range)`.
    pub fn ranges(self) -> ([f64; 2], [f64; 2]) {
        let (mb, gc) = match self {
            TaskSuite::Standard => ([1.0, 10.0], [0.001, 0.1]),
            TaskSuite::DataIntensive => ([10.0, 20.0], [0.1, 0.5]),
            TaskSuite::ComputeIntensive => ([1.0, 5.0], [1.0, 2.0]),
        };
        (
            [mb[0] * BITS_PER_MB, mb[1] * BITS_PER_MB],
            [gc[0] * CYCLES_PER_GIGACYCLE, gc[1] * CYCLES_PER_GIGACYCLE],
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskSuite::Standard => "standard",
            TaskSuite::DataIntensive => "data-intensive",
            TaskSuite::ComputeIntensive => "compute-intensive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Side of the square deployment area, metres. The AP sits at its centre.
    pub arena_m: f64,
    /// Lower clamp on UE-AP distance, metres.
    pub min_distance_m: f64,
    pub n_ues: usize,
    pub n_cns: usize,
    /// Receive antennas at the AP.
    pub n_antennas: usize,
    pub bandwidth_hz: f64,
    pub bandwidth_mode: BandwidthMode,
    /// Channel uses per packet.
    pub blocklength: f64,
    pub decode_error_prob: f64,
    pub noise_density_dbm_hz: f64,
    pub tx_power_w: f64,
    pub local_rate_hz: f64,
    pub es_capacity_hz: f64,
    pub cn_capacity_range_hz: [f64; 2],
    /// Unit gain of latency reduction.
    pub gain_latency_reduction: f64,
    /// Price of one gigacycle on a node of 10 GHz capacity; prices scale
    /// linearly with capacity.
    pub cost_coefficient: f64,
    /// Twin deviation as a percentage of the physical rate.
    pub twin_deviation_pct: f64,
    /// Number of task types `F` in the catalog.
    pub n_task_types: usize,
    pub task_suite: TaskSuite,
    /// Maximum tolerable latency of every task, seconds.
    pub deadline_s: f64,
    pub request_model: RequestModel,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            arena_m: 200.0,
            min_distance_m: 1.0,
            n_ues: 6,
            n_cns: 5,
            n_antennas: 8,
            bandwidth_hz: 1.0e7,
            bandwidth_mode: BandwidthMode::Shared,
            blocklength: 512.0,
            decode_error_prob: 1.0e-9,
            noise_density_dbm_hz: -174.0,
            tx_power_w: 0.2,
            local_rate_hz: 1.0e9,
            es_capacity_hz: 3.0e10,
            cn_capacity_range_hz: [1.0e9, 1.0e10],
            gain_latency_reduction: 2.5,
            cost_coefficient: 0.1,
            twin_deviation_pct: 5.0,
            n_task_types: 6,
            task_suite: TaskSuite::Standard,
            deadline_s: 1.0,
            request_model: RequestModel::Uniform,
            rng_seed: 1,
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be positive and finite, got {v}")))
    }
}

impl SystemConfig {
    /// Noise power over a band of `band_hz`, watts.
    pub fn noise_power_w(&self, band_hz: f64) -> f64 {
        dbm_to_watts(self.noise_density_dbm_hz) * band_hz
    }

    /// Band available to one UE's uplink.
    pub fn ue_bandwidth_hz(&self) -> f64 {
        match self.bandwidth_mode {
            BandwidthMode::Shared => self.bandwidth_hz,
            BandwidthMode::Split => self.bandwidth_hz / self.n_ues as f64,
        }
    }

    /// Per-gigacycle offloading price at a node of the given capacity.
    pub fn price_per_gigacycle(&self, capacity_hz: f64) -> f64 {
        self.cost_coefficient * capacity_hz / PRICE_REFERENCE_HZ
    }

    pub fn twin_fraction(&self) -> f64 {
        self.twin_deviation_pct / 100.0
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Returns the config unchanged iff every field is in range.
pub fn validate_config(cfg: &SystemConfig) -> Result<SystemConfig, ConfigError> {
    positive("arena_m", cfg.arena_m)?;
    positive("min_distance_m", cfg.min_distance_m)?;
    if cfg.n_ues == 0 {
        return Err(ConfigError::new("n_ues", "at least one UE is required"));
    }
    if cfg.n_antennas == 0 {
        return Err(ConfigError::new("n_antennas", "at least one antenna is required"));
    }
    positive("bandwidth_hz", cfg.bandwidth_hz)?;
    if !(cfg.blocklength.is_finite() && cfg.blocklength >= 1.0) {
        return Err(ConfigError::new(
            "blocklength",
            format!("must be at least one channel use, got {}", cfg.blocklength),
        ));
    }
    if !(cfg.decode_error_prob > 0.0 && cfg.decode_error_prob < 0.5) {
        return Err(ConfigError::new(
            "decode_error_prob",
            format!("must lie in (0, 0.5), got {}", cfg.decode_error_prob),
        ));
    }
    if !cfg.noise_density_dbm_hz.is_finite() {
        return Err(ConfigError::new("noise_density_dbm_hz", "must be finite"));
    }
    positive("tx_power_w", cfg.tx_power_w)?;
    positive("local_rate_hz", cfg.local_rate_hz)?;
    positive("es_capacity_hz", cfg.es_capacity_hz)?;
    let [lo, hi] = cfg.cn_capacity_range_hz;
    positive("cn_capacity_range_hz", lo)?;
    positive("cn_capacity_range_hz", hi)?;
    if lo > hi {
        return Err(ConfigError::new(
            "cn_capacity_range_hz",
            format!("lower bound {lo} exceeds upper bound {hi}"),
        ));
    }
    if !(cfg.gain_latency_reduction.is_finite() && cfg.gain_latency_reduction >= 0.0) {
        return Err(ConfigError::new("gain_latency_reduction", "must be non-negative"));
    }
    if !(cfg.cost_coefficient.is_finite() && cfg.cost_coefficient >= 0.0) {
        return Err(ConfigError::new("cost_coefficient", "must be non-negative"));
    }
    if !(cfg.twin_deviation_pct >= 0.0 && cfg.twin_deviation_pct < 100.0) {
        return Err(ConfigError::new(
            "twin_deviation_pct",
            format!("must lie in [0, 100), got {}", cfg.twin_deviation_pct),
        ));
    }
    if cfg.n_task_types == 0 {
        return Err(ConfigError::new("n_task_types", "catalog needs at least one task"));
    }
    positive("deadline_s", cfg.deadline_s)?;
    if let RequestModel::Markov { stay } = cfg.request_model {
        if !(0.0..=1.0).contains(&stay) {
            return Err(ConfigError::new("request_model", "stay probability must lie in [0, 1]"));
        }
    }
    Ok(cfg.clone())
}
