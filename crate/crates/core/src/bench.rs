//! Update-throughput measurements and scaling fits.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;
use crate::error::{EngineError, Result};
use crate::map::{Pos, Terrain, Tile, TileMap};
use crate::rng::SplitMix64;
use crate::scenarios::{Objective, ScenarioSpec};
use crate::rules::Rules;
use crate::state::{EntityId, EntityState, GameState};

/// Schema tag written in the first column of every row.
pub const CSV_SCHEMA: &str = "bench/1";
pub const CSV_HEADER: &str = "schema,map_size,units,config,ticks,seconds,ups";

/// Named engine configurations used by the benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchConfig {
    /// Non-durative, path-finding off.
    Minimal,
    /// Durative, path-finding on, fog of war maintained.
    Maximal,
    /// Durative with path-finding, no fog.
    Durative,
    /// Durative with greedy stepping, no fog.
    DurativeNoPathfinding,
}

impl BenchConfig {
    pub const ALL: [BenchConfig; 4] =
        [BenchConfig::Minimal, BenchConfig::Maximal, BenchConfig::Durative, BenchConfig::DurativeNoPathfinding];

    pub fn name(self) -> &'static str {
        match self {
            BenchConfig::Minimal => "minimal",
            BenchConfig::Maximal => "maximal",
            BenchConfig::Durative => "durative",
            BenchConfig::DurativeNoPathfinding => "durative_no_pathfinding",
        }
    }

    pub fn parse(name: &str) -> Result<BenchConfig> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| EngineError::Bench(format!("unknown bench config '{name}'")))
    }

    pub fn game_config(self) -> GameConfig {
        let base = GameConfig { tick_limit: u64::MAX, auto_attack: false, ..GameConfig::default() };
        match self {
            BenchConfig::Minimal => GameConfig { durative: false, pathfinding_enabled: false, ..base },
            BenchConfig::Maximal => GameConfig { fog_of_war: true, ..base },
            BenchConfig::Durative => base,
            BenchConfig::DurativeNoPathfinding => GameConfig { pathfinding_enabled: false, ..base },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub map_size: i32,
    /// Units per player.
    pub units: u32,
    pub config: BenchConfig,
    pub ticks: u64,
    pub seconds: f64,
    pub ups: f64,
}

impl Sample {
    /// Wall-clock seconds per engine tick.
    pub fn cost(&self) -> f64 {
        self.seconds / self.ticks as f64
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub map_sizes: Vec<i32>,
    pub unit_counts: Vec<u32>,
    pub configs: Vec<BenchConfig>,
    /// Upper bound on measured ticks per cell.
    pub max_ticks: u64,
    /// Wall-clock cap per cell.
    pub duration: Duration,
    /// Ticks run before timing starts.
    pub warmup_ticks: u64,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            map_sizes: vec![10, 15, 21, 31],
            unit_counts: vec![1, 5, 10, 20],
            configs: vec![BenchConfig::Minimal, BenchConfig::Maximal],
            max_ticks: 1_000_000,
            duration: Duration::from_secs(1),
            warmup_ticks: 200,
            seed: 1,
        }
    }
}

/// Benchmark arena: open ground with short wall segments every six tiles,
/// so routed movement has obstacles to work around.
pub fn bench_map(size: i32) -> TileMap {
    let mut map = TileMap::filled(size, size, Tile::GRASS);
    for p in map.positions().collect::<Vec<_>>() {
        let wall = (p.x % 6 == 3 && (1..=3).contains(&(p.y % 6))) || (p.y % 6 == 5 && (3..=4).contains(&(p.x % 6)));
        if wall {
            map.tile_mut(p).terrain = Terrain::Wall;
        }
    }
    map
}

fn bench_scenario(size: i32) -> ScenarioSpec {
    let map = bench_map(size);
    let open = |p: &Pos| map.tile(*p).is_open_ground();
    let first = map.positions().find(open).expect("bench map has open ground");
    let last = map.positions().collect::<Vec<_>>().into_iter().rev().find(open).expect("open ground");
    let spawns = vec![first, last];
    ScenarioSpec {
        name: format!("bench-{size}"),
        map,
        spawns,
        objective: Objective::LastManStanding,
        episode_ticks: None,
        expected_length: (0, 0),
        decorations: 0,
        rules: Rules::bundled(),
        config: GameConfig::default(),
    }
}

/// Game state for one cell: `units` Footmen per player on distinct random
/// free tiles. `None` when the units do not fit.
pub fn bench_state(size: i32, units: u32, config: GameConfig, seed: u64) -> Result<Option<GameState>> {
    let spec = bench_scenario(size);
    let mut state = GameState::new_game(config, &spec, seed)?;
    let footman = state.rules().by_name("Footman").expect("bundled roster has Footman");
    let mut free: Vec<Pos> = state.map().positions().filter(|&p| state.map().is_free(p)).collect();
    // The starting workers count towards each player's units.
    let extra = units.saturating_sub(1) as usize;
    if units == 0 || free.len() < 2 * extra {
        return Ok(None);
    }
    let mut rng = SplitMix64::new(seed ^ 0xbe9c);
    for owner in 0..2 {
        for _ in 0..extra {
            let i = rng.below(free.len() as u64) as usize;
            let p = free.swap_remove(i);
            state.spawn_entity(owner, footman, p, EntityState::Idle)?;
        }
    }
    Ok(Some(state))
}

/// Drives the workload: every idle unit is ordered to a random open tile.
struct Workload {
    rng: SplitMix64,
    open: Vec<Pos>,
    idle: Vec<EntityId>,
}

impl Workload {
    fn new(state: &GameState, seed: u64) -> Self {
        let open = state.map().positions().filter(|&p| state.map().tile(p).is_open_ground()).collect();
        Workload { rng: SplitMix64::new(seed), open, idle: Vec::new() }
    }

    fn tick(&mut self, state: &mut GameState) -> Result<()> {
        self.idle.clear();
        self.idle.extend(state.entities().filter(|e| e.state == EntityState::Idle).map(|e| e.id));
        for &id in &self.idle {
            let dest = self.open[self.rng.below(self.open.len() as u64) as usize];
            state.order_move(id, dest)?;
        }
        state.tick();
        Ok(())
    }
}

/// Consecutive timed slices per cell; the fastest is reported, which filters
/// out scheduler noise from other processes while still sampling the
/// workload's steady state.
pub const REPEATS: u32 = 5;

/// Times one cell. Returns `None` for infeasible cells.
pub fn measure_cell(
    size: i32,
    units: u32,
    config: BenchConfig,
    options: &BenchOptions,
) -> Result<Option<Sample>> {
    let Some(mut state) = bench_state(size, units, config.game_config(), options.seed)? else {
        return Ok(None);
    };
    let mut workload = Workload::new(&state, options.seed);
    for _ in 0..options.warmup_ticks {
        workload.tick(&mut state)?;
    }
    let slice = options.duration / REPEATS;
    let mut best: Option<Sample> = None;
    for _ in 0..REPEATS {
        let start = Instant::now();
        let mut ticks = 0u64;
        // Check the clock in batches to keep timer reads out of the hot loop.
        const BATCH: u64 = 64;
        while ticks < options.max_ticks && start.elapsed() < slice {
            let n = BATCH.min(options.max_ticks - ticks);
            for _ in 0..n {
                workload.tick(&mut state)?;
            }
            ticks += n;
        }
        let seconds = start.elapsed().as_secs_f64();
        if ticks == 0 {
            continue;
        }
        let sample = Sample { map_size: size, units, config, ticks, seconds, ups: ticks as f64 / seconds };
        if best.as_ref().is_none_or(|b| sample.ups > b.ups) {
            best = Some(sample);
        }
    }
    Ok(best)
}

/// Runs every (config, map size, unit count) cell. Infeasible cells are
/// skipped; a zero duration yields an empty table.
pub fn run_update_benchmark(options: &BenchOptions) -> Result<Vec<Sample>> {
    let mut rows = Vec::new();
    if options.duration.is_zero() || options.max_ticks == 0 {
        return Ok(rows);
    }
    for &config in &options.configs {
        for &size in &options.map_sizes {
            for &units in &options.unit_counts {
                if let Some(sample) = measure_cell(size, units, config, options)? {
                    rows.push(sample);
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[Sample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            CSV_SCHEMA.to_string(),
            r.map_size.to_string(),
            r.units.to_string(),
            r.config.name().to_string(),
            r.ticks.to_string(),
            format!("{:.6}", r.seconds),
            format!("{:.1}", r.ups),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> EngineError {
    EngineError::Io(e.to_string())
}

/// Least-squares line through (x, y) with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(EngineError::Bench("need at least two points to fit".into()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(EngineError::Bench("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - (slope * p.0 + intercept)).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(LinearFit { slope, intercept, r2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Linear,
    Superlinear,
}

/// Log-log slope above which unit-count growth counts as superlinear.
pub const SUPERLINEAR_SLOPE: f64 = 1.15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    /// Fit of per-tick cost against tile count.
    pub map: LinearFit,
    /// Slope of log(per-tick cost) against log(units).
    pub unit_slope: f64,
    pub unit_curve_class: GrowthClass,
}

pub fn classify_growth(points: &[(f64, f64)]) -> Result<(f64, GrowthClass)> {
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(EngineError::Bench("log-log fit needs positive values".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let slope = linear_fit(&logs)?.slope;
    let class = if slope > SUPERLINEAR_SLOPE { GrowthClass::Superlinear } else { GrowthClass::Linear };
    Ok((slope, class))
}

/// Map fit over the rows at `map_units` units, unit classification over the
/// rows on the largest map.
pub fn fit_scaling(rows: &[Sample], map_units: u32) -> Result<ScalingFit> {
    let map_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.units == map_units)
        .map(|r| ((r.map_size as f64).powi(2), r.cost()))
        .collect();
    let mut sizes: Vec<i32> = rows.iter().filter(|r| r.units == map_units).map(|r| r.map_size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 4 {
        return Err(EngineError::Bench(format!("need at least 4 map sizes at {map_units} units")));
    }
    let largest = *rows.iter().map(|r| &r.map_size).max().expect("non-empty");
    let unit_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.map_size == largest)
        .map(|r| (r.units as f64, r.cost()))
        .collect();
    let (unit_slope, unit_curve_class) = classify_growth(&unit_points)?;
    Ok(ScalingFit { map: linear_fit(&map_points)?, unit_slope, unit_curve_class })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_unit_r2() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 3.0 * i as f64 + 2.0)).collect();
        let fit = linear_fit(&pts).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_growth_is_superlinear_and_linear_is_not() {
        let quad: Vec<(f64, f64)> = [5.0, 10.0, 20.0, 40.0].iter().map(|&u| (u, u * u)).collect();
        assert_eq!(classify_growth(&quad).unwrap().1, GrowthClass::Superlinear);
        let lin: Vec<(f64, f64)> = [5.0, 10.0, 20.0, 40.0].iter().map(|&u| (u, 7.0 * u + 1.0)).collect();
        assert_eq!(classify_growth(&lin).unwrap().1, GrowthClass::Linear);
    }

    #[test]
    fn degenerate_tables_are_rejected() {
        assert!(linear_fit(&[(1.0, 1.0)]).is_err());
        assert!(linear_fit(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(fit_scaling(&[], 1).is_err());
    }

    #[test]
    fn zero_duration_gives_empty_table() {
        let options = BenchOptions { duration: Duration::ZERO, ..BenchOptions::default() };
        assert!(run_update_benchmark(&options).unwrap().is_empty());
    }

    #[test]
    fn oversized_cells_are_skipped() {
        let options = BenchOptions {
            map_sizes: vec![4],
            unit_counts: vec![100],
            duration: Duration::from_millis(10),
            ..BenchOptions::default()
        };
        assert!(run_update_benchmark(&options).unwrap().is_empty());
    }

    #[test]
    fn csv_has_versioned_header() {
        let row = Sample { map_size: 10, units: 1, config: BenchConfig::Minimal, ticks: 5, seconds: 0.5, ups: 10.0 };
        let mut out = Vec::new();
        write_csv(&[row], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().nth(1).unwrap(), "bench/1,10,1,minimal,5,0.500000,10.0");
    }
}
