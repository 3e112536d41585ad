//! Partial computation offloading in COIN-assisted multi-access edge
//! computing networks.
//!
//! The crate models a single access point with `L` receive antennas serving
//! `M` single-antenna UEs over finite-blocklength URLLC uplinks. Each UE can
//! split its task between one in-network computing node (CN) and the edge
//! server (ES). Node processing rates are observed through a digital twin
//! that carries a known deviation from the physical rate.
//!
//! * [`config`] and [`scenario`]: configuration, units and seeded scenarios.
//! * [`channel`]: Rayleigh uplink, MF-SIC SINR and the short-packet rate.
//! * [`latency`]: twin-corrected computation latency and e2e assembly.
//! * [`game`]: utilities, the offloading game and best-response dynamics.
//! * [`orra`]: Double-DQN and baseline providers of offloading ratios and
//!   ES shares.
//! * [`harness`]: slot/episode orchestration, metrics, CSV and plots.
//! * [`verify`]: oracle suites shared by the CLI and the acceptance tests.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod game;
pub mod harness;
pub mod latency;
pub mod orra;
pub mod rng;
pub mod scenario;
pub mod verify;

pub use config::{ConfigError, SystemConfig};
pub use scenario::{ScenarioState, TaskCatalog, TaskSpec};
