use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use cnoma_core::harness::{
    config_digest, optimize_alpha, optimize_eh, run_sweep, write_results, write_rows, AxisKind, ExperimentConfig,
    Mode, RunManifest, SweepOutput, SweepSpec,
};

#[derive(Parser, Debug)]
#[command(name = "cnoma", version, about = "BER engine for energy-harvesting cooperative NOMA relaying")]
struct Cli {
    /// Experiment configuration (JSON). Without it every setting takes its default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Result CSV; a manifest is written next to it. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Analytical ABER over the SNR grid
    Analytic,
    /// Monte Carlo BER over the SNR grid
    Simulate,
    /// Analytical and Monte Carlo side by side over the SNR grid
    Compare,
    /// Sweep the power share of U2 at fixed SNR
    SweepAlpha,
    /// Sweep the hybrid (beta, rho) grid at fixed SNR
    SweepEh,
    /// Grid-search the hybrid (beta, rho) pair per scenario
    OptimizeEh,
    /// Grid-search alpha2 per scenario and protocol
    OptimizeAlpha,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Analytic => "analytic",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::SweepAlpha => "sweep-alpha",
            Command::SweepEh => "sweep-eh",
            Command::OptimizeEh => "optimize-eh",
            Command::OptimizeAlpha => "optimize-alpha",
        }
    }
}

fn load_config(cli: &Cli) -> Result<(ExperimentConfig, String)> {
    let (mut cfg, digest) = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => (ExperimentConfig::default(), config_digest("{}")?),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok((cfg, digest))
}

fn optima(cmd: Command, cfg: &ExperimentConfig) -> Result<Option<serde_json::Value>> {
    let scenarios = cfg.resolved_scenarios()?;
    let found = match cmd {
        Command::OptimizeEh => {
            let (beta, rho) = (cfg.beta_grid.values()?, cfg.rho_grid.values()?);
            let v = scenarios
                .iter()
                .map(|sc| optimize_eh(sc, cfg.eta, cfg.alpha2, cfg.fixed_snr_db, &beta, &rho, cfg.objective))
                .collect::<cnoma_core::Result<Vec<_>>>()?;
            serde_json::to_value(v)?
        }
        Command::OptimizeAlpha => {
            let grid = cfg.alpha2_grid.values()?;
            let mut v = Vec::new();
            for sc in &scenarios {
                for p in cfg.resolved_protocols()? {
                    v.push(optimize_alpha(sc, &p, cfg.fixed_snr_db, &grid, cfg.objective)?);
                }
            }
            serde_json::to_value(v)?
        }
        _ => return Ok(None),
    };
    Ok(Some(found))
}

fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let workers = match cli.workers {
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let (cfg, digest) = load_config(cli)?;

    let (axis, mode) = match cli.command {
        Command::Analytic => (AxisKind::Snr, Mode::Analytic),
        Command::Simulate => (AxisKind::Snr, Mode::Simulate),
        Command::Compare => (AxisKind::Snr, Mode::Both),
        Command::SweepAlpha => (AxisKind::Alpha2, cfg.mode.unwrap_or(Mode::Analytic)),
        Command::SweepEh => (AxisKind::EhGrid, cfg.mode.unwrap_or(Mode::Analytic)),
        Command::OptimizeEh => (AxisKind::EhGrid, Mode::Analytic),
        Command::OptimizeAlpha => (AxisKind::Alpha2, Mode::Analytic),
    };
    let spec = SweepSpec::from_config(&cfg, axis, mode)?;
    log::info!("{}: {} points on {workers} workers", cli.command.name(), spec.points()?.len());
    let SweepOutput { rows, points, failures } = run_sweep(&spec, workers)?;
    let optima = optima(cli.command, &cfg)?;
    if let Some(o) = &optima {
        eprintln!("{}", serde_json::json!({ "optima": o }));
    }

    match &cli.out {
        Some(path) => {
            write_results(path, &rows)?;
            let manifest = RunManifest {
                artifact_version: env!("CARGO_PKG_VERSION").to_string(),
                command: cli.command.name().to_string(),
                config_digest: digest,
                master_seed: cfg.seed,
                workers,
                started_unix_s,
                wall_clock_s: started.elapsed().as_secs_f64(),
                points,
                failures,
                optima,
            };
            let mpath = RunManifest::path_for(path);
            manifest.write(&mpath)?;
            log::info!("wrote {} rows to {} and {}", rows.len(), path.display(), mpath.display());
        }
        None => {
            if !failures.is_empty() {
                log::warn!("{} points failed", failures.len());
            }
            write_rows(std::io::stdout().lock(), &rows).context("writing results to stdout")?;
        }
    }
    Ok(())
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help, --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_line("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // core errors already carry their source in the message
            let line = match e.downcast_ref::<cnoma_core::Error>() {
                Some(ce) => error_line(ce.kind(), &ce.to_string()),
                None => error_line("other", &format!("{e:#}")),
            };
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
