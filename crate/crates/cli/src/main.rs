//! `gridrts`: headless matches, benchmarks, the game server, replay checks
//! and the scenario list.
//!
//! Exit codes: 0 success, 1 engine or runtime error, 2 usage error.

mod remote;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use gridrts_core::bench::{self, BenchConfig, BenchOptions};
use gridrts_core::session::replay_with;
use gridrts_core::{load_scenario, scenario_names, ScenarioSpec, Transcript};
use gridrts_server::{bind, bind_address, serve, ServerConfig};

#[derive(Parser, Debug)]
#[command(name = "gridrts", version, about = "Deterministic grid real-time strategy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play headless matches between built-in agents; one CSV row per episode.
    Run(run::RunArgs),
    /// Measure updates per second across map sizes, unit counts and configs.
    Bench(BenchArgs),
    /// Host games over WebSocket (`/ws`) with a health endpoint (`/healthz`).
    Serve(ServeArgs),
    /// Re-simulate a transcript and verify every state-hash checkpoint.
    Replay(ReplayArgs),
    /// Show the bundled scenarios.
    Scenarios(ScenariosArgs),
    /// Play one remote seat on a running server.
    Remote(remote::RemoteArgs),
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Square map sides.
    #[arg(long, value_delimiter = ',', default_value = "10,15,21,31")]
    maps: Vec<i32>,
    /// Units per player.
    #[arg(long, value_delimiter = ',', default_value = "1,5,10,20")]
    units: Vec<u32>,
    /// Engine configurations: minimal, maximal, durative, durative_no_pathfinding.
    #[arg(long, value_delimiter = ',', default_value = "minimal,maximal")]
    configs: Vec<String>,
    /// Wall-clock budget per cell, in seconds.
    #[arg(long, default_value_t = 1.0)]
    seconds: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Listen address; defaults to $GRIDRTS_BIND, then 127.0.0.1:8080.
    #[arg(long)]
    bind: Option<String>,
    #[arg(long, default_value_t = 64)]
    max_games: usize,
    /// Write each finished game's transcript here.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    /// Simulated seconds a disconnected seat idles before forfeiting.
    #[arg(long, default_value_t = 5.0)]
    grace_seconds: f64,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    transcript: PathBuf,
}

#[derive(Args, Debug)]
struct ScenariosArgs {
    /// List scenario names with map size, players and episode length.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run(args) => run::run(args),
        Command::Bench(args) => bench_cmd(args),
        Command::Serve(args) => serve_cmd(args),
        Command::Replay(args) => replay_cmd(&args.transcript),
        Command::Scenarios(args) => {
            if !args.list {
                bail!("nothing to do; pass --list");
            }
            list_scenarios()
        }
        Command::Remote(args) => remote::remote(args),
    }
}

/// A bundled scenario name or the path of a scenario file.
pub(crate) fn resolve_scenario(reference: &str) -> anyhow::Result<ScenarioSpec> {
    let path = Path::new(reference);
    if path.is_file() {
        return Ok(ScenarioSpec::from_file(path)?);
    }
    Ok(load_scenario(reference)?)
}

fn list_scenarios() -> anyhow::Result<()> {
    println!("name\tmap\tplayers\tobjective\tepisode_ticks");
    for name in scenario_names() {
        let spec = load_scenario(name)?;
        let ticks = spec.episode_ticks.map_or("-".to_string(), |t| t.to_string());
        println!(
            "{name}\t{}x{}\t{}\t{}\t{ticks}",
            spec.map.width(),
            spec.map.height(),
            spec.players(),
            spec.objective.name()
        );
    }
    Ok(())
}

fn replay_cmd(path: &Path) -> anyhow::Result<()> {
    let transcript = Transcript::load(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = resolve_scenario(&transcript.header.scenario)?;
    let report = replay_with(&spec, &transcript)?;
    println!(
        "ok: {} ticks, {} checkpoints verified, final hash {:016x}",
        report.ticks, report.checkpoints, report.final_hash
    );
    Ok(())
}

fn bench_cmd(args: BenchArgs) -> anyhow::Result<()> {
    if !(args.seconds > 0.0) {
        bail!("--seconds must be positive");
    }
    let configs = args.configs.iter().map(|c| BenchConfig::parse(c)).collect::<Result<Vec<_>, _>>()?;
    let options = BenchOptions {
        map_sizes: args.maps,
        unit_counts: args.units.clone(),
        configs: configs.clone(),
        duration: Duration::from_secs_f64(args.seconds),
        seed: args.seed,
        ..BenchOptions::default()
    };
    let rows = bench::run_update_benchmark(&options)?;
    match &args.out {
        Some(path) => bench::write_csv(&rows, std::fs::File::create(path)?)?,
        None => bench::write_csv(&rows, std::io::stdout().lock())?,
    }
    let map_units = args.units.iter().copied().min().unwrap_or(1);
    for config in configs {
        let subset: Vec<_> = rows.iter().filter(|r| r.config == config).cloned().collect();
        match bench::fit_scaling(&subset, map_units) {
            Ok(fit) => eprintln!(
                "{}: tiles R^2 {:.3}, unit log-log slope {:.2} ({:?})",
                config.name(),
                fit.map.r2,
                fit.unit_slope,
                fit.unit_curve_class
            ),
            Err(e) => eprintln!("{}: no scaling fit ({e})", config.name()),
        }
    }
    Ok(())
}

fn serve_cmd(args: ServeArgs) -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    if let Some(dir) = &args.transcripts {
        std::fs::create_dir_all(dir)?;
    }
    let addr = bind_address(args.bind.as_deref());
    let config = ServerConfig {
        max_games: args.max_games,
        transcript_dir: args.transcripts,
        grace_seconds: args.grace_seconds,
        ..ServerConfig::default()
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = bind(&addr).await?;
        serve(listener, config).await?;
        Ok(())
    })
}
