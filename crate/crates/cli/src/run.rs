use std::path::PathBuf;

use anyhow::bail;
use clap::Args;

use gridrts_core::session::DEFAULT_FRAME_SKIP;
use gridrts_core::{make_agent, play_match, GameConfig, MatchResult, ScenarioSpec};

use crate::resolve_scenario;

/// Schema tag in the first column of every row.
pub const RUN_SCHEMA: &str = "run/1";

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Bundled scenario name or scenario file.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    p0: Option<String>,
    #[arg(long)]
    p1: Option<String>,
    #[arg(long)]
    p2: Option<String>,
    #[arg(long)]
    p3: Option<String>,
    #[arg(long)]
    p4: Option<String>,
    #[arg(long)]
    p5: Option<String>,
    #[arg(long, default_value_t = 1)]
    episodes: u64,
    /// Episode i plays with seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// GameConfig override, repeatable: `--config fog_of_war=true`.
    #[arg(long = "config", value_name = "KEY=VALUE")]
    config: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_FRAME_SKIP)]
    frame_skip: u32,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Save every episode's transcript into this directory.
    #[arg(long)]
    transcripts: Option<PathBuf>,
}

/// Agent seed for a seat: distinct per player, fixed by the episode seed.
fn agent_seed(episode_seed: u64, player: usize) -> u64 {
    episode_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(player as u64 + 1)
}

fn play_episode(
    spec: &ScenarioSpec,
    config: &GameConfig,
    agents: &[String],
    seed: u64,
    frame_skip: u32,
    scenario_ref: &str,
    transcripts: Option<&PathBuf>,
    episode: u64,
) -> anyhow::Result<MatchResult> {
    let players = agents
        .iter()
        .enumerate()
        .map(|(p, name)| make_agent(name, agent_seed(seed, p)))
        .collect::<Result<Vec<_>, _>>()?;
    let (result, mut transcript) = play_match(spec, config.clone(), seed, players, frame_skip)?;
    if let Some(dir) = transcripts {
        transcript.header.scenario = scenario_ref.to_string();
        transcript.save(&dir.join(format!("episode-{episode}.jsonl")))?;
    }
    Ok(result)
}

pub fn run(args: RunArgs) -> anyhow::Result<()> {
    let spec = resolve_scenario(&args.scenario)?;
    let seats: Vec<String> = [&args.p0, &args.p1, &args.p2, &args.p3, &args.p4, &args.p5]
        .into_iter()
        .take(spec.players())
        .map(|a| a.clone())
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| anyhow::anyhow!("{} needs agents --p0..--p{}", spec.name, spec.players() - 1))?;
    let extra = [&args.p0, &args.p1, &args.p2, &args.p3, &args.p4, &args.p5]
        .into_iter()
        .skip(spec.players())
        .any(Option::is_some);
    if extra {
        bail!("{} has only {} players", spec.name, spec.players());
    }
    let pairs = GameConfig::parse_override_pairs(&args.config)?;
    let config = spec.config.with_overrides(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    if let Some(dir) = &args.transcripts {
        std::fs::create_dir_all(dir)?;
    }

    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, args.episodes.max(1) as usize);
    let episodes: Vec<u64> = (0..args.episodes).collect();
    let chunk = episodes.len().div_ceil(jobs).max(1);
    let mut results: Vec<(u64, u64, MatchResult)> = std::thread::scope(|scope| {
        let handles: Vec<_> = episodes
            .chunks(chunk)
            .map(|part| {
                let (spec, config, seats, args) = (&spec, &config, &seats, &args);
                scope.spawn(move || {
                    part.iter()
                        .map(|&episode| {
                            let seed = args.seed.wrapping_add(episode);
                            let result = play_episode(
                                spec,
                                config,
                                seats,
                                seed,
                                args.frame_skip,
                                &args.scenario,
                                args.transcripts.as_ref(),
                                episode,
                            )?;
                            Ok((episode, seed, result))
                        })
                        .collect::<anyhow::Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("episode worker panicked"))
            .collect::<anyhow::Result<Vec<Vec<_>>>>()
            .map(|v| v.into_iter().flatten().collect())
    })?;
    results.sort_by_key(|r| r.0);

    let out: Box<dyn std::io::Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["schema".to_string(), "episode".into(), "seed".into(), "winner".into(), "ticks".into()];
    header.extend((0..spec.players()).map(|p| format!("score_p{p}")));
    header.push("final_hash".into());
    w.write_record(&header)?;
    let mut wins = vec![0u64; spec.players()];
    let mut draws = 0u64;
    for (episode, seed, r) in &results {
        match r.winner {
            Some(p) => wins[p] += 1,
            None => draws += 1,
        }
        let mut row = vec![
            RUN_SCHEMA.to_string(),
            episode.to_string(),
            seed.to_string(),
            r.winner.map_or("draw".to_string(), |p| p.to_string()),
            r.ticks.to_string(),
        ];
        row.extend(r.scores.iter().map(|s| s.to_string()));
        row.push(format!("{:016x}", r.final_hash));
        w.write_record(&row)?;
    }
    w.flush()?;
    let summary: Vec<String> = wins.iter().enumerate().map(|(p, n)| format!("p{p} ({}) {n}", seats[p])).collect();
    eprintln!("{} episodes: {}, draws {draws}", results.len(), summary.join(", "));
    Ok(())
}
