//! `coinmec` command-line driver.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use coinmec::harness::metrics::Summary;
use coinmec::harness::{aggregate, plot, run_experiment, scenario_for, Dataset, RunConfig, Scheme, Sweep};
use coinmec::verify::{self, VerifyOptions};
use coinmec::ScenarioState;

const LOG_ENV: &str = "COINMEC_LOG";
const SCENARIO_FORMAT: &str = "coinmec-scenario-v1";
const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("COINMEC_GIT_VERSION"), ")");

#[derive(Parser, Debug)]
#[command(
    name = "coinmec",
    version = VERSION,
    about = "Partial offloading experiments for COIN-assisted MEC",
    after_help = "Log verbosity is read from COINMEC_LOG (error, warn, info, debug, trace; default info)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment over the configured schemes.
    Run(RunArgs),
    /// Sweep UE count, CN count or task type.
    Sweep(SweepArgs),
    /// Run the oracle suites and print pass/fail per suite.
    Verify(VerifyArgs),
    /// Write the generated scenario as JSON.
    DumpScenario(DumpArgs),
    /// Run an experiment on a scenario JSON written by dump-scenario.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for the scenario and every random stream.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Number of episodes.
    #[arg(long, value_name = "N")]
    episodes: Option<usize>,
    /// Decision slots per episode.
    #[arg(long, value_name = "N")]
    slots: Option<usize>,
    /// Independent replications.
    #[arg(long, value_name = "N")]
    replications: Option<usize>,
    /// Schemes to run: DDQN-EPG, EPG-Rand, MEC (comma separated).
    #[arg(long, value_name = "NAME[,NAME]", value_delimiter = ',')]
    scheme: Option<Vec<Scheme>>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepKind {
    Ue,
    Cn,
    Task,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Sweep axis; the config's sweep values are used when its axis matches.
    #[arg(long, value_enum)]
    sweep: SweepKind,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Random small games checked against brute-force enumeration.
    #[arg(long, value_name = "N", default_value_t = 100)]
    small_instances: usize,
    /// Seed of the verification streams.
    #[arg(long, value_name = "U64", default_value_t = 7)]
    seed: u64,
    /// Random draws for the latency identities.
    #[arg(long, value_name = "N", default_value_t = 1000)]
    latency_draws: usize,
    /// Random grid points for the short-packet rate bounds.
    #[arg(long, value_name = "N", default_value_t = 10_000)]
    blocklength_grid: usize,
    /// Best-response runs in the finite-improvement suite.
    #[arg(long, value_name = "N", default_value_t = 1000)]
    improvement_runs: usize,
    /// Two-UE instances in the potential audit table.
    #[arg(long, value_name = "N", default_value_t = 20)]
    epg_instances: usize,
    /// Also write verify.json and epg_table.csv here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DumpArgs {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Scenario seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; the scenario goes to DIR/scenario.json.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// Scenario JSON written by dump-scenario.
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    format: String,
    seed: u64,
    scenario: ScenarioState,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: Vec<String>,
    created_unix_s: u64,
    seed: u64,
    inputs: Vec<String>,
    outputs: Vec<String>,
    truncated: bool,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    if !path.exists() {
        bail!("config not found: {}", path.display());
    }
    let text = fs::read_to_string(path).map_err(|e| anyhow!("config unreadable: {}: {e}", path.display()))?;
    RunConfig::from_toml(&text).map_err(|e| anyhow!("config schema mismatch in {}: {e}", path.display()))
}

fn apply(common: &Common, cfg: &mut RunConfig) {
    if let Some(seed) = common.seed {
        cfg.system.rng_seed = seed;
        cfg.experiment.seed = seed;
    }
    if let Some(n) = common.episodes {
        cfg.experiment.episodes = n;
    }
    if let Some(n) = common.slots {
        cfg.experiment.slots_per_episode = n;
    }
    if let Some(n) = common.replications {
        cfg.experiment.replications = n;
    }
    if let Some(s) = &common.scheme {
        cfg.experiment.schemes = s.clone();
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| anyhow!("output directory not writable: {}: {e}", dir.display()))
}

fn write(dir: &Path, name: &str, bytes: &[u8], outputs: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    outputs.push(name.to_string());
    Ok(())
}

fn manifest(dir: &Path, seed: u64, inputs: Vec<String>, mut outputs: Vec<String>, truncated: bool) -> Result<()> {
    outputs.push("manifest.json".into());
    let m = Manifest {
        tool: "coinmec",
        version: VERSION,
        command: std::env::args().collect(),
        created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        seed,
        inputs,
        outputs,
        truncated,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&m)?)?;
    Ok(())
}

fn emit(common: &Common, cfg: &RunConfig, data: &Dataset, inputs: Vec<String>) -> Result<Summary> {
    let dir = &common.out;
    let mut outputs = Vec::new();
    let mut csv = Vec::new();
    data.write_metrics(&mut csv)?;
    write(dir, "metrics.csv", &csv, &mut outputs)?;
    let mut trace = Vec::new();
    data.write_traces(&mut trace)?;
    write(dir, "trace.csv", &trace, &mut outputs)?;
    let summary = aggregate(data, cfg.experiment.summary_tail_episodes);
    write(dir, "summary.json", &serde_json::to_vec_pretty(&summary)?, &mut outputs)?;
    write(dir, "config.toml", cfg.to_toml().as_bytes(), &mut outputs)?;
    if let Some(ck) = &data.checkpoint {
        write(dir, "checkpoint.json", &serde_json::to_vec(ck)?, &mut outputs)?;
    }
    if common.plots {
        let curve = plot::learning_curve(data).render();
        write(dir, "plots/utility_vs_episode.svg", curve.as_bytes(), &mut outputs)?;
        if cfg.experiment.sweep != Sweep::None {
            let axis = cfg.experiment.sweep.axis_name();
            let chart = plot::sweep_chart(&summary, axis).render();
            write(
                dir,
                &format!("plots/utility_vs_{axis}.svg"),
                chart.as_bytes(),
                &mut outputs,
            )?;
        }
    }
    manifest(dir, cfg.experiment.seed, inputs, outputs, data.truncated)?;
    Ok(summary)
}

fn print_summary(summary: &Summary) {
    for r in &summary.rows {
        println!(
            "{:<9} {:>8}  utility {:>10.4} ± {:<8.4} latency {:.4} s  rounds {:.2}  violations {}",
            r.scheme,
            r.sweep_value,
            r.utility_mean,
            r.utility_std,
            r.latency_mean_s,
            r.rounds_mean,
            r.constraint_violations
        );
    }
    for i in &summary.improvements {
        match i.improvement_pct {
            Some(p) => println!("DDQN-EPG vs {:<8} at {:>8}: {:+.1}%", i.baseline, i.sweep_value, p),
            None => println!(
                "DDQN-EPG vs {:<8} at {:>8}: undefined (zero baseline)",
                i.baseline, i.sweep_value
            ),
        }
    }
    if summary.truncated {
        println!("warning: wall-clock budget exhausted, results are partial");
    }
}

fn inputs_of(common: &Common) -> Vec<String> {
    common.config.iter().map(|p| p.display().to_string()).collect()
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    apply(&args.common, &mut cfg);
    cfg.experiment.sweep = Sweep::None;
    cfg.validate()?;
    prepare_out(&args.common.out)?;
    info!(
        "run: seed {} episodes {} replications {}",
        cfg.experiment.seed, cfg.experiment.episodes, cfg.experiment.replications
    );
    let data = run_experiment(&cfg, None)?;
    print_summary(&emit(&args.common, &cfg, &data, inputs_of(&args.common))?);
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut cfg = load_config(args.common.config.as_deref())?;
    apply(&args.common, &mut cfg);
    let wanted = match args.sweep {
        SweepKind::Ue => Sweep::ue_default(),
        SweepKind::Cn => Sweep::cn_default(),
        SweepKind::Task => Sweep::task_default(),
    };
    if cfg.experiment.sweep.axis_name() != wanted.axis_name() {
        cfg.experiment.sweep = wanted;
    }
    cfg.validate()?;
    prepare_out(&args.common.out)?;
    info!(
        "sweep {}: seed {}",
        cfg.experiment.sweep.axis_name(),
        cfg.experiment.seed
    );
    let data = run_experiment(&cfg, None)?;
    print_summary(&emit(&args.common, &cfg, &data, inputs_of(&args.common))?);
    Ok(())
}

fn cmd_dump(args: DumpArgs) -> Result<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.system.rng_seed = seed;
        cfg.experiment.seed = seed;
    }
    cfg.validate()?;
    prepare_out(&args.out)?;
    let scenario = scenario_for(&cfg.system)?;
    let file = ScenarioFile {
        format: SCENARIO_FORMAT.into(),
        seed: cfg.system.rng_seed,
        scenario,
    };
    let mut outputs = Vec::new();
    write(
        &args.out,
        "scenario.json",
        &serde_json::to_vec_pretty(&file)?,
        &mut outputs,
    )?;
    let inputs = args.config.iter().map(|p| p.display().to_string()).collect();
    manifest(&args.out, cfg.system.rng_seed, inputs, outputs, false)?;
    println!("{}", args.out.join("scenario.json").display());
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let path = &args.scenario;
    if !path.exists() {
        bail!("scenario not found: {}", path.display());
    }
    let text = fs::read_to_string(path).map_err(|e| anyhow!("scenario unreadable: {}: {e}", path.display()))?;
    let file: ScenarioFile =
        serde_json::from_str(&text).map_err(|e| anyhow!("scenario schema mismatch in {}: {e}", path.display()))?;
    if file.format != SCENARIO_FORMAT {
        bail!("scenario schema mismatch: unknown format `{}`", file.format);
    }
    file.scenario
        .check()
        .map_err(|e| anyhow!("scenario schema mismatch: {e}"))?;

    let mut cfg = load_config(args.common.config.as_deref())?;
    cfg.system = file.scenario.config.clone();
    cfg.experiment.seed = file.seed;
    apply(&args.common, &mut cfg);
    cfg.experiment.sweep = Sweep::None;
    cfg.validate()?;
    prepare_out(&args.common.out)?;
    let data = run_experiment(&cfg, Some(&file.scenario))?;
    let mut inputs = inputs_of(&args.common);
    inputs.push(path.display().to_string());
    print_summary(&emit(&args.common, &cfg, &data, inputs)?);
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<bool> {
    let opts = VerifyOptions {
        seed: args.seed,
        small_instances: args.small_instances,
        latency_draws: args.latency_draws,
        blocklength_grid: args.blocklength_grid,
        improvement_runs: args.improvement_runs,
        epg_instances: args.epg_instances,
    };
    let report = verify::run_all(&opts);
    for s in &report.suites {
        println!("{s}");
    }
    if let Some(dir) = &args.out {
        prepare_out(dir)?;
        let mut outputs = Vec::new();
        write(dir, "verify.json", &serde_json::to_vec_pretty(&report)?, &mut outputs)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &report.epg_rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow!("{e}"))?;
        write(dir, "epg_table.csv", &bytes, &mut outputs)?;
        manifest(dir, args.seed, Vec::new(), outputs, false)?;
    }
    let passed = report.passed();
    println!("verify: {}", if passed { "all suites passed" } else { "FAILED" });
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Sweep(a) => cmd_sweep(a).map(|_| true),
        Command::Verify(a) => cmd_verify(a),
        Command::DumpScenario(a) => cmd_dump(a).map(|_| true),
        Command::Replay(a) => cmd_replay(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
