//! Browser demo bindings. Every export returns a JSON string so the page
//! needs no extra glue beyond the generated `wasm-bindgen` module.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use coinmec::channel::{realize_channel, UrllcLink};
use coinmec::game::SlotGame;
use coinmec::latency::{e2e_latency, full_es_reference_latency, local_latency, OffloadPlan};
use coinmec::orra::{random_orra, ActionCodec};
use coinmec::rng::{self, tag};
use coinmec::scenario::{generate_scenario, ComputeNode, NodeKind, TaskSpec};
use coinmec::SystemConfig;

#[derive(Serialize)]
pub struct RatePoint {
    snr_db: f64,
    shannon_bps: f64,
    urllc_bps: f64,
}

#[derive(Serialize)]
struct Error {
    error: String,
}

fn to_json<T: Serialize>(v: &Result<T, String>) -> String {
    match v {
        Ok(x) => serde_json::to_string(x),
        Err(e) => serde_json::to_string(&Error { error: e.clone() }),
    }
    .unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

/// Shannon and short-packet rates over an SNR range in dB.
pub fn rate_curve(
    bandwidth_hz: f64,
    blocklength: f64,
    eps: f64,
    snr_db_lo: f64,
    snr_db_hi: f64,
    points: usize,
) -> Result<Vec<RatePoint>, String> {
    let link = UrllcLink::new(bandwidth_hz, blocklength, eps).map_err(|e| e.to_string())?;
    let n = points.clamp(2, 2000);
    Ok((0..n)
        .map(|i| {
            let snr_db = snr_db_lo + (snr_db_hi - snr_db_lo) * i as f64 / (n - 1) as f64;
            let g = 10f64.powf(snr_db / 10.0);
            RatePoint {
                snr_db,
                shannon_bps: bandwidth_hz * (1.0 + g).log2(),
                urllc_bps: link.rate(g),
            }
        })
        .collect())
}

#[wasm_bindgen]
pub fn urllc_rate_curve(
    bandwidth_hz: f64,
    blocklength: f64,
    eps: f64,
    snr_db_lo: f64,
    snr_db_hi: f64,
    points: usize,
) -> String {
    to_json(&rate_curve(
        bandwidth_hz,
        blocklength,
        eps,
        snr_db_lo,
        snr_db_hi,
        points,
    ))
}

#[derive(Serialize)]
struct SplitPoint {
    cn_ratio: f64,
    t_tx: f64,
    t_cn: f64,
    t_es: f64,
    t_e2e: f64,
}

#[derive(Serialize)]
pub struct SplitCurve {
    points: Vec<SplitPoint>,
    local_s: f64,
    full_es_s: f64,
}

/// E2E latency as a task is split between one CN (`x`) and the ES
/// (`1 - x`).
#[allow(clippy::too_many_arguments)]
pub fn split_curve(
    input_mb: f64,
    gigacycles: f64,
    uplink_mbps: f64,
    cn_ghz: f64,
    es_share: f64,
    twin_pct: f64,
    points: usize,
) -> Result<SplitCurve, String> {
    let task = TaskSpec::new(input_mb * 8e6, gigacycles * 1e9, f64::MAX).map_err(|e| e.to_string())?;
    if !(0.0..100.0).contains(&twin_pct) {
        return Err("twin deviation must lie in [0, 100) %".into());
    }
    let dev = twin_pct / 100.0;
    let nodes = [
        ComputeNode {
            kind: NodeKind::Es,
            capacity_hz: 3e10,
            twin_deviation_hz: dev * 3e10,
            cost_per_gigacycle: 0.0,
        },
        ComputeNode {
            kind: NodeKind::Cn,
            capacity_hz: cn_ghz * 1e9,
            twin_deviation_hz: dev * cn_ghz * 1e9,
            cost_per_gigacycle: 0.0,
        },
    ];
    let bps = uplink_mbps * 1e6;
    let n = points.clamp(2, 1000);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        let plan = OffloadPlan {
            ratios_cn: vec![vec![x]],
            ratio_es: vec![1.0 - x],
            es_share: vec![es_share],
        };
        let l = e2e_latency(&plan, 0, &task, bps, &nodes).map_err(|e| e.to_string())?;
        out.push(SplitPoint {
            cn_ratio: x,
            t_tx: l.t_tx,
            t_cn: l.t_cn,
            t_es: l.t_es,
            t_e2e: l.t_e2e,
        });
    }
    Ok(SplitCurve {
        points: out,
        local_s: local_latency(&task, 1e9),
        full_es_s: full_es_reference_latency(&task, bps, &nodes[0], es_share).map_err(|e| e.to_string())?,
    })
}

#[wasm_bindgen]
pub fn latency_vs_ratio(
    input_mb: f64,
    gigacycles: f64,
    uplink_mbps: f64,
    cn_ghz: f64,
    es_share: f64,
    twin_pct: f64,
    points: usize,
) -> String {
    to_json(&split_curve(
        input_mb,
        gigacycles,
        uplink_mbps,
        cn_ghz,
        es_share,
        twin_pct,
        points,
    ))
}

#[derive(Serialize)]
struct UeView {
    position_m: [f64; 2],
    request: usize,
    rate_bps: f64,
    aleph: f64,
    beta: f64,
    decision: String,
    utility: f64,
}

#[derive(Serialize)]
struct Step {
    ue: usize,
    old: String,
    new: String,
    system_utility: f64,
}

#[derive(Serialize)]
pub struct GameView {
    arena_m: f64,
    ap_position_m: [f64; 2],
    cn_capacity_ghz: Vec<f64>,
    ues: Vec<UeView>,
    steps: Vec<Step>,
    rounds: usize,
    converged: bool,
    system_utility: f64,
    is_equilibrium: bool,
}

/// One slot of the offloading game with a random ORRA and best-response
/// dynamics.
pub fn game(n_ues: usize, n_cns: usize, seed: u64, gain: f64) -> Result<GameView, String> {
    let cfg = SystemConfig {
        n_ues,
        n_cns,
        gain_latency_reduction: gain,
        rng_seed: seed,
        ..Default::default()
    };
    let mut scn = generate_scenario(&cfg, seed).map_err(|e| e.to_string())?;
    let mut r = rng::stream(seed, &[tag::REQUESTS]);
    let req = coinmec::scenario::sample_requests(cfg.request_model, scn.catalog.len(), &scn.requests(), &mut r);
    scn.set_requests(&req);
    let active: Vec<bool> = req.iter().map(|&x| x > 0).collect();
    let channel = realize_channel(&scn, &active, &mut rng::stream(seed, &[tag::FADING])).map_err(|e| e.to_string())?;
    let codec = ActionCodec::new(11).map_err(|e| e.to_string())?;
    let orra = random_orra(&mut rng::stream(seed, &[tag::ORRA]), &active, &codec);
    let g = SlotGame::new(&scn, &channel.rate_bps, &orra).map_err(|e| e.to_string())?;
    let out = g.run_pco(50 * n_ues, &mut rng::stream(seed, &[tag::WINNER]));
    Ok(GameView {
        arena_m: cfg.arena_m,
        ap_position_m: scn.ap_position_m,
        cn_capacity_ghz: scn.nodes[1..].iter().map(|n| n.capacity_hz / 1e9).collect(),
        ues: (0..n_ues)
            .map(|m| UeView {
                position_m: scn.ues[m].position_m,
                request: req[m],
                rate_bps: channel.rate_bps[m],
                aleph: orra.aleph[m],
                beta: orra.beta[m],
                decision: out.profile.decisions[m].to_string(),
                utility: g.utility(m, out.profile.decisions[m]),
            })
            .collect(),
        steps: out
            .trace
            .iter()
            .map(|t| Step {
                ue: t.ue,
                old: t.old.clone(),
                new: t.new.clone(),
                system_utility: t.system_utility,
            })
            .collect(),
        rounds: out.rounds,
        converged: out.converged,
        system_utility: g.system_utility(&out.profile),
        is_equilibrium: g.is_nash_equilibrium(&out.profile),
    })
}

#[wasm_bindgen]
pub fn play_game(n_ues: usize, n_cns: usize, seed: u64, gain: f64) -> String {
    to_json(&game(n_ues, n_cns, seed, gain))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_curve_stays_below_capacity() {
        let c = rate_curve(1e7, 512.0, 1e-9, -10.0, 30.0, 50).unwrap();
        assert_eq!(c.len(), 50);
        assert!(c.iter().all(|p| p.urllc_bps <= p.shannon_bps && p.urllc_bps >= 0.0));
        assert!(urllc_rate_curve(1e7, 512.0, 0.0, 0.0, 1.0, 3).contains("error"));
    }

    #[test]
    fn split_endpoints() {
        let c = split_curve(2.0, 0.5, 50.0, 5.0, 1.0, 5.0, 11).unwrap();
        let first = &c.points[0];
        assert_eq!(first.t_cn, 0.0);
        assert!((first.t_e2e - c.full_es_s).abs() < 1e-12);
        assert_eq!(c.points[10].t_es, 0.0);
    }

    #[test]
    fn game_reaches_equilibrium() {
        let v = game(6, 5, 3, 2.5).unwrap();
        assert!(v.converged && v.is_equilibrium);
        assert_eq!(v.ues.len(), 6);
        let json = play_game(6, 5, 3, 2.5);
        assert!(json.contains("\"steps\""));
        assert!(play_game(0, 5, 3, 2.5).contains("error"));
    }
}
