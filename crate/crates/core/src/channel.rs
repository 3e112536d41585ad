//! Uplink channel: path loss, Rayleigh fading, MF-SIC SINR and the
//! finite-blocklength (normal approximation) URLLC rate.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, SQRT_2};
use thiserror::Error;

use crate::rng::SimRng;
use crate::scenario::ScenarioState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error("channel column of UE {0} has zero norm")]
    ZeroNormColumn(usize),
    #[error("probability {0} outside (0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

/// `-35.3 - 37.6 log10(d)` dB.
pub fn path_loss_db(distance_m: f64) -> Result<f64, ChannelError> {
    if !(distance_m > 0.0) {
        return Err(ChannelError::NonPositiveDistance(distance_m));
    }
    Ok(-35.3 - 37.6 * distance_m.log10())
}

/// Linear large-scale gain `10^(PL/10)`.
pub fn large_scale_gain(distance_m: f64) -> Result<f64, ChannelError> {
    Ok(10f64.powf(path_loss_db(distance_m)? / 10.0))
}

/// `L` i.i.d. CN(0, 1) entries; real and imaginary parts have variance 1/2.
pub fn sample_small_scale(rng: &mut SimRng, antennas: usize) -> Vec<Complex64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..antennas)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * scale, im * scale)
        })
        .collect()
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// `a^H b`.
fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Matched filtering with successive interference cancellation.
///
/// `columns[m]` is `h_m`. UEs are decoded by descending `||h_m||^2` (ties to
/// the lower index); each UE sees interference from every UE decoded after
/// it. Returns the decode order and per-UE SINR in the original indexing.
pub fn sinr_mf_sic(
    columns: &[Vec<Complex64>],
    powers: &[f64],
    noise_w: f64,
) -> Result<(Vec<usize>, Vec<f64>), ChannelError> {
    if powers.len() != columns.len() {
        return Err(ChannelError::DimensionMismatch {
            expected: columns.len(),
            got: powers.len(),
        });
    }
    if !(noise_w > 0.0) {
        return Err(ChannelError::NonPositive("noise power"));
    }
    let norms: Vec<f64> = columns.iter().map(|h| norm_sqr(h)).collect();
    if let Some(m) = norms.iter().position(|&n| !(n > 0.0)) {
        return Err(ChannelError::ZeroNormColumn(m));
    }
    let mut order: Vec<usize> = (0..columns.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let mut sinr = vec![0.0; columns.len()];
    for (pos, &m) in order.iter().enumerate() {
        let interference: f64 = order[pos + 1..]
            .iter()
            .map(|&n| powers[n] * inner(&columns[m], &columns[n]).norm_sqr() / norms[m])
            .sum();
        sinr[m] = powers[m] * norms[m] / (interference + noise_w);
    }
    Ok((order, sinr))
}

/// Gaussian tail `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 1)`.
///
/// Starts from the Abramowitz–Stegun 26.2.23 rational approximation and
/// polishes with Newton steps on `ln Q(x) - ln eps`.
pub fn q_inverse(eps: f64) -> Result<f64, ChannelError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(ChannelError::ProbabilityOutOfRange(eps));
    }
    if eps > 0.5 {
        return q_inverse(1.0 - eps).map(|x| -x);
    }
    let t = (-2.0 * eps.ln()).sqrt();
    let mut x = t
        - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
            / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);
    let target = eps.ln();
    for _ in 0..50 {
        let q = q_function(x);
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        // d/dx ln Q(x) = -pdf / Q
        let step = (q.ln() - target) * q / pdf;
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// `V = 1 - (1 + gamma)^-2`.
pub fn channel_dispersion(gamma: f64) -> f64 {
    1.0 - (1.0 + gamma).powi(-2)
}

/// Short-packet uplink with the decoding-error quantile precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrllcLink {
    pub bandwidth_hz: f64,
    pub blocklength: f64,
    q_inv: f64,
}

impl UrllcLink {
    pub fn new(bandwidth_hz: f64, blocklength: f64, eps: f64) -> Result<Self, ChannelError> {
        if !(bandwidth_hz > 0.0) {
            return Err(ChannelError::NonPositive("bandwidth"));
        }
        if !(blocklength >= 1.0) {
            return Err(ChannelError::NonPositive("blocklength"));
        }
        Ok(Self {
            bandwidth_hz,
            blocklength,
            q_inv: q_inverse(eps)?,
        })
    }

    /// Achievable rate in bit/s, clamped at zero where the dispersion
    /// penalty exceeds the Shannon term.
    pub fn rate(&self, gamma: f64) -> f64 {
        let gamma = gamma.max(0.0);
        let shannon = self.bandwidth_hz * (1.0 + gamma).log2();
        let penalty = self.bandwidth_hz * (channel_dispersion(gamma) / self.blocklength).sqrt() * self.q_inv / LN_2;
        (shannon - penalty).max(0.0)
    }
}

pub fn urllc_rate(gamma: f64, bandwidth_hz: f64, blocklength: f64, eps: f64) -> Result<f64, ChannelError> {
    Ok(UrllcLink::new(bandwidth_hz, blocklength, eps)?.rate(gamma))
}

/// Parallel upload of task portions: the slowest destination dominates.
///
/// Returns `f64::INFINITY` when a destination with data has zero rate.
pub fn transmission_latency(bits: &[f64], rates_bps: &[f64]) -> f64 {
    bits.iter()
        .zip(rates_bps)
        .filter(|(&b, _)| b > 0.0)
        .map(|(&b, &r)| if r > 0.0 { b / r } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// Columns `h_m` of the `L x M` channel matrix.
    pub h: Vec<Vec<Complex64>>,
    pub large_scale: Vec<f64>,
    /// Decode order over the transmitting UEs.
    pub decode_order: Vec<usize>,
    pub sinr: Vec<f64>,
    pub rate_bps: Vec<f64>,
}

/// Draws fading for every UE and evaluates SINR and rate for the UEs with
/// `active[m]`; idle UEs get zero SINR and rate.
pub fn realize_channel(
    scn: &ScenarioState,
    active: &[bool],
    rng: &mut SimRng,
) -> Result<ChannelRealization, ChannelError> {
    let cfg = &scn.config;
    let m = scn.n_ues();
    if active.len() != m {
        return Err(ChannelError::DimensionMismatch {
            expected: m,
            got: active.len(),
        });
    }
    let mut large_scale = Vec::with_capacity(m);
    let mut h = Vec::with_capacity(m);
    for ue in 0..m {
        let g = large_scale_gain(scn.distance_m(ue))?;
        let small = sample_small_scale(rng, cfg.n_antennas);
        h.push(small.into_iter().map(|c| c * g.sqrt()).collect::<Vec<_>>());
        large_scale.push(g);
    }

    let band = cfg.ue_bandwidth_hz();
    let link = UrllcLink::new(band, cfg.blocklength, cfg.decode_error_prob)?;
    let tx: Vec<usize> = (0..m).filter(|&u| active[u]).collect();
    let mut sinr = vec![0.0; m];
    let mut rate_bps = vec![0.0; m];
    let mut decode_order = Vec::new();
    if !tx.is_empty() {
        let cols: Vec<Vec<Complex64>> = tx.iter().map(|&u| h[u].clone()).collect();
        let powers: Vec<f64> = tx.iter().map(|&u| scn.ues[u].tx_power_w).collect();
        let (order, s) = sinr_mf_sic(&cols, &powers, cfg.noise_power_w(band))?;
        decode_order = order.into_iter().map(|i| tx[i]).collect();
        for (i, &u) in tx.iter().enumerate() {
            sinr[u] = s[i];
            rate_bps[u] = link.rate(s[i]);
        }
    }
    Ok(ChannelRealization {
        h,
        large_scale,
        decode_order,
        sinr,
        rate_bps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn bisect_q_inverse(eps: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_function(mid) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn path_loss_examples() {
        assert!((path_loss_db(1.0).unwrap() + 35.3).abs() < 1e-12);
        assert!((path_loss_db(10.0).unwrap() + 72.9).abs() < 1e-12);
        assert!((path_loss_db(141.42).unwrap() + 116.159).abs() < 1e-3);
        assert!(path_loss_db(0.0).is_err());
        assert!(large_scale_gain(-1.0).is_err());
    }

    #[test]
    fn large_scale_gain_examples() {
        assert!((large_scale_gain(1.0).unwrap() - 2.951_209_226_666_4e-4).abs() < 1e-15);
        assert!((large_scale_gain(10.0).unwrap() / 10f64.powf(-7.29) - 1.0).abs() < 1e-12);
        assert!(large_scale_gain(5.0).unwrap() > large_scale_gain(50.0).unwrap());
    }

    #[test]
    fn small_scale_moments() {
        let mut r = rng::stream(5, &[]);
        let n = 100_000;
        let draws = sample_small_scale(&mut r, n);
        let power = draws.iter().map(|c| c.norm_sqr()).sum::<f64>() / n as f64;
        let mean = draws.iter().sum::<Complex64>() / n as f64;
        assert!((power - 1.0).abs() < 0.02, "{power}");
        assert!(mean.norm() < 0.02);
        let a = sample_small_scale(&mut rng::stream(9, &[]), 4);
        let b = sample_small_scale(&mut rng::stream(9, &[]), 4);
        assert_eq!(a, b);
    }

    #[test]
    fn sinr_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let (_, s) = sinr_mf_sic(&[vec![one]], &[1.0], 1.0).unwrap();
        assert_eq!(s, vec![1.0]);

        let cols = vec![vec![one, zero], vec![zero, one * 2.0]];
        let (order, s) = sinr_mf_sic(&cols, &[1.0, 0.5], 0.1).unwrap();
        assert_eq!(order, vec![1, 0]);
        assert!((s[0] - 10.0).abs() < 1e-12);
        assert!((s[1] - 20.0).abs() < 1e-12);

        // identical unit-norm columns: first decoded sees p|h^H h|^2/||h||^2 = 1
        let cols = vec![vec![one], vec![one]];
        let (order, s) = sinr_mf_sic(&cols, &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(order, vec![0, 1]);
        assert!((s[0] - 0.5).abs() < 1e-12);
        assert!((s[1] - 1.0).abs() < 1e-12);

        assert_eq!(
            sinr_mf_sic(&[vec![zero]], &[1.0], 1.0).unwrap_err(),
            ChannelError::ZeroNormColumn(0)
        );
    }

    #[test]
    fn q_inverse_examples() {
        assert!(q_inverse(0.5).unwrap().abs() < 1e-12);
        let x = q_inverse(1e-9).unwrap();
        let oracle = bisect_q_inverse(1e-9);
        assert!((x - oracle).abs() < 1e-9, "{x} vs {oracle}");
        assert!((x - 5.997_807).abs() < 1e-5);
        let r = q_inverse(1e-4).unwrap();
        assert!((q_function(r) - 1e-4).abs() / 1e-4 < 1e-6);
        assert!(q_inverse(0.0).is_err());
        assert!(q_inverse(1.0).is_err());
        assert!((q_inverse(0.9).unwrap() + q_inverse(0.1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(channel_dispersion(0.0), 0.0);
        assert!((channel_dispersion(10.0) - (1.0 - 1.0 / 121.0)).abs() < 1e-15);
        assert!(channel_dispersion(1e9) > 0.999_999);
    }

    #[test]
    fn urllc_rate_examples() {
        assert_eq!(urllc_rate(0.0, 1e7, 512.0, 1e-9).unwrap(), 0.0);
        let shannon = 1e7 * 11f64.log2();
        let long = urllc_rate(10.0, 1e7, 1e12, 1e-9).unwrap();
        assert!((long - shannon).abs() / shannon < 1e-4);
        // Shannon term minus B sqrt(V/N) Q^-1(eps) / ln 2, quantile from bisection
        let v: f64 = 1.0 - 1.0 / 121.0;
        let expected = shannon - 1e7 * (v / 512.0).sqrt() * bisect_q_inverse(1e-9) / LN_2;
        let got = urllc_rate(10.0, 1e7, 512.0, 1e-9).unwrap();
        assert!((got - expected).abs() / expected < 1e-9);
        assert!((got - 3.079e7).abs() < 1e4, "{got}");
    }

    #[test]
    fn urllc_rate_clamps_at_low_snr() {
        assert_eq!(urllc_rate(1e-3, 1e7, 16.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn transmission_latency_examples() {
        assert_eq!(transmission_latency(&[0.0, 0.0], &[1e7, 0.0]), 0.0);
        assert!((transmission_latency(&[8e6], &[1e7]) - 0.8).abs() < 1e-12);
        let i = 1e5;
        let (w1, w2) = (0.4 * i / 2e-3, 0.6 * i / 5e-3);
        assert!((transmission_latency(&[0.4 * i, 0.6 * i], &[w1, w2]) - 5e-3).abs() < 1e-15);
        assert!(transmission_latency(&[1.0], &[0.0]).is_infinite());
    }

    fn column(seed: u64, l: usize) -> Vec<Complex64> {
        sample_small_scale(&mut rng::stream(seed, &[]), l)
    }

    proptest! {
        #[test]
        fn rate_is_bounded_and_monotone(
            g in 0.0f64..1e4,
            dg in 0.0f64..100.0,
            n in 1.0f64..1e5,
            dn in 0.0f64..1e4,
            eps_exp in -12.0f64..-0.31,
        ) {
            let eps = 10f64.powf(eps_exp);
            let b = 1e7;
            let w = urllc_rate(g, b, n, eps).unwrap();
            prop_assert!(w <= b * (1.0 + g).log2() + 1e-6);
            prop_assert!(w >= 0.0);
            prop_assert!(urllc_rate(g + dg, b, n, eps).unwrap() >= w - 1e-6);
            prop_assert!(urllc_rate(g, b, n + dn, eps).unwrap() >= w - 1e-6);
            prop_assert!(urllc_rate(g, b, n, (eps * 2.0).min(0.49)).unwrap() >= w - 1e-6);
        }

        #[test]
        fn last_decoded_is_interference_free(seed in 0u64..1000, m in 1usize..6) {
            let cols: Vec<_> = (0..m).map(|i| column(seed * 10 + i as u64, 4)).collect();
            let p: Vec<f64> = (0..m).map(|i| 0.5 + i as f64).collect();
            let (order, s) = sinr_mf_sic(&cols, &p, 0.3).unwrap();
            let last = *order.last().unwrap();
            let snr = p[last] * norm_sqr(&cols[last]) / 0.3;
            prop_assert!((s[last] - snr).abs() <= 1e-12 * snr);
            prop_assert!(s.iter().all(|&x| x >= 0.0));
        }

        #[test]
        fn sinr_is_label_equivariant(seed in 0u64..1000, rot in 1usize..4) {
            let m = 4;
            let cols: Vec<_> = (0..m).map(|i| column(seed * 10 + i as u64, 3)).collect();
            let p = vec![1.0, 0.7, 0.4, 2.0];
            let (_, s) = sinr_mf_sic(&cols, &p, 0.1).unwrap();
            let perm: Vec<usize> = (0..m).map(|i| (i + rot) % m).collect();
            let cols2: Vec<_> = perm.iter().map(|&i| cols[i].clone()).collect();
            let p2: Vec<_> = perm.iter().map(|&i| p[i]).collect();
            let (_, s2) = sinr_mf_sic(&cols2, &p2, 0.1).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert!((s2[k] - s[i]).abs() <= 1e-12 * s[i].max(1.0));
            }
        }
    }
}
