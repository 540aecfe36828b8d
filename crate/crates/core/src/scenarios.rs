//! The bundled scenario suite, custom scenario files, rewards and episode
//! termination.

use std::collections::VecDeque;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;
use crate::error::{EngineError, Result};
use crate::map::{MapFile, Pos, ResourceDeposit, ResourceKind, TileMap, DEFAULT_LUMBER_AMOUNT};
use crate::pathfinding::GridView;
use crate::rng::SplitMix64;
use crate::rules::Rules;
use crate::state::GameState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    LastManStanding,
    Score,
    Resources,
    Army,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::LastManStanding => "last_man_standing",
            Objective::Score => "score",
            Objective::Resources => "resources",
            Objective::Army => "army",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub name: String,
    pub map: TileMap,
    /// Spawn tile per player, indexed by player.
    pub spawns: Vec<Pos>,
    pub objective: Objective,
    /// Fixed episode length for solo scenarios.
    pub episode_ticks: Option<u64>,
    /// Typical game length in ticks for competent play; informational only.
    pub expected_length: (u64, u64),
    /// Mirrored pairs of lumber tiles scattered from the game seed.
    pub decorations: u32,
    pub rules: Arc<Rules>,
    /// Configuration this scenario runs with unless overridden.
    pub config: GameConfig,
}

struct Bundled {
    name: &'static str,
    map: &'static str,
    amounts: &'static str,
    players: usize,
    objective: Objective,
    episode_ticks: Option<u64>,
    expected_length: (u64, u64),
    decorations: u32,
}

const SOLO_MAP: &str = include_str!("../maps/solo-10x10.map");
const SOLO_AMOUNTS: &str = include_str!("../maps/solo-10x10.amounts");

const BUNDLED: [Bundled; 9] = [
    Bundled {
        name: "10x10-2-FFA",
        map: include_str!("../maps/10x10-2-FFA.map"),
        amounts: include_str!("../maps/10x10-2-FFA.amounts"),
        players: 2,
        objective: Objective::LastManStanding,
        episode_ticks: None,
        expected_length: (600, 900),
        decorations: 2,
    },
    Bundled {
        name: "15x15-2-FFA",
        map: include_str!("../maps/15x15-2-FFA.map"),
        amounts: include_str!("../maps/15x15-2-FFA.amounts"),
        players: 2,
        objective: Objective::LastManStanding,
        episode_ticks: None,
        expected_length: (900, 1300),
        decorations: 4,
    },
    Bundled {
        name: "21x21-2-FFA",
        map: include_str!("../maps/21x21-2-FFA.map"),
        amounts: include_str!("../maps/21x21-2-FFA.amounts"),
        players: 2,
        objective: Objective::LastManStanding,
        episode_ticks: None,
        expected_length: (2000, 3000),
        decorations: 6,
    },
    Bundled {
        name: "31x31-2-FFA",
        map: include_str!("../maps/31x31-2-FFA.map"),
        amounts: include_str!("../maps/31x31-2-FFA.amounts"),
        players: 2,
        objective: Objective::LastManStanding,
        episode_ticks: None,
        expected_length: (6000, 9000),
        decorations: 10,
    },
    Bundled {
        name: "31x31-4-FFA",
        map: include_str!("../maps/31x31-4-FFA.map"),
        amounts: include_str!("../maps/31x31-4-FFA.amounts"),
        players: 4,
        objective: Objective::LastManStanding,
        episode_ticks: None,
        expected_length: (8000, 11000),
        decorations: 0,
    },
    Bundled {
        name: "31x31-6-FFA",
        map: include_str!("../maps/31x31-6-FFA.map"),
        amounts: include_str!("../maps/31x31-6-FFA.amounts"),
        players: 6,
        objective: Objective::LastManStanding,
        episode_ticks: None,
        expected_length: (15000, 20000),
        decorations: 0,
    },
    Bundled {
        name: "solo-score",
        map: SOLO_MAP,
        amounts: SOLO_AMOUNTS,
        players: 1,
        objective: Objective::Score,
        episode_ticks: Some(1200),
        expected_length: (1200, 1200),
        decorations: 0,
    },
    Bundled {
        name: "solo-resources",
        map: SOLO_MAP,
        amounts: SOLO_AMOUNTS,
        players: 1,
        objective: Objective::Resources,
        episode_ticks: Some(600),
        expected_length: (600, 600),
        decorations: 0,
    },
    Bundled {
        name: "solo-army",
        map: SOLO_MAP,
        amounts: SOLO_AMOUNTS,
        players: 1,
        objective: Objective::Army,
        episode_ticks: Some(1200),
        expected_length: (1200, 1200),
        decorations: 0,
    },
];

/// Names of the bundled scenarios in registry order.
pub fn scenario_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.name).collect()
}

/// Loads a bundled scenario by name, or a custom scenario file when `name`
/// points at an existing file.
pub fn load_scenario(name: &str) -> Result<ScenarioSpec> {
    if let Some(b) = BUNDLED.iter().find(|b| b.name == name) {
        return ScenarioSpec::assemble(
            b.name,
            MapFile::parse(b.map, Some(b.amounts))?,
            b.players,
            b.objective,
            b.episode_ticks,
            b.expected_length,
            b.decorations,
            Rules::bundled(),
            None,
        );
    }
    let path = Path::new(name);
    if path.is_file() {
        return ScenarioSpec::from_file(path);
    }
    Err(EngineError::UnknownScenario(name.to_string()))
}

/// On-disk custom scenario description (TOML).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    map: String,
    amounts: Option<String>,
    players: usize,
    objective: Objective,
    episode_ticks: Option<u64>,
    expected_length: Option<(u64, u64)>,
    #[serde(default)]
    decorations: u32,
    rules: Option<String>,
    #[serde(default)]
    config: toml::Table,
}

impl ScenarioSpec {
    /// Reads a custom scenario; relative map paths resolve against the
    /// scenario file's directory.
    pub fn from_file(path: &Path) -> Result<ScenarioSpec> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Scenario(format!("{}: {e}", path.display())))?;
        let file: ScenarioFile =
            toml::from_str(&text).map_err(|e| EngineError::Scenario(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let read = |rel: &str| {
            std::fs::read_to_string(dir.join(rel))
                .map_err(|e| EngineError::Scenario(format!("{rel}: {e}")))
        };
        let map_text = read(&file.map)?;
        let amounts = file.amounts.as_deref().map(read).transpose()?;
        let rules = match &file.rules {
            Some(rel) => Arc::new(Rules::parse(&read(rel)?)?),
            None => Rules::bundled(),
        };
        let overrides: Vec<(String, String)> = file
            .config
            .iter()
            .map(|(k, v)| {
                let raw = match v {
                    toml::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.clone(), raw)
            })
            .collect();
        let expected = file.expected_length.unwrap_or_else(|| {
            let t = file.episode_ticks.unwrap_or(GameConfig::default().tick_limit / 2);
            (t, t)
        });
        Self::assemble(
            &file.name,
            MapFile::parse(&map_text, amounts.as_deref())?,
            file.players,
            file.objective,
            file.episode_ticks,
            expected,
            file.decorations,
            rules,
            Some(&overrides),
        )
    }

    /// Builds a scenario from in-memory map text (fixtures, tools). Expected
    /// length defaults to the episode length, or half the default tick limit.
    pub fn from_text(
        name: &str,
        map_text: &str,
        amounts: Option<&str>,
        players: usize,
        objective: Objective,
        episode_ticks: Option<u64>,
    ) -> Result<ScenarioSpec> {
        let t = episode_ticks.unwrap_or(GameConfig::default().tick_limit / 2);
        Self::assemble(
            name,
            MapFile::parse(map_text, amounts)?,
            players,
            objective,
            episode_ticks,
            (t, t),
            0,
            Rules::bundled(),
            None,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        name: &str,
        parsed: MapFile,
        players: usize,
        objective: Objective,
        episode_ticks: Option<u64>,
        expected_length: (u64, u64),
        decorations: u32,
        rules: Arc<Rules>,
        overrides: Option<&[(String, String)]>,
    ) -> Result<ScenarioSpec> {
        if players == 0 || players > parsed.spawns.len() {
            return Err(EngineError::Scenario(format!("{name}: player count {players} out of range")));
        }
        let solo = players == 1;
        if solo != (objective != Objective::LastManStanding) {
            return Err(EngineError::Scenario(format!(
                "{name}: objective {} needs {} players",
                objective.name(),
                if solo { "several" } else { "exactly one of the" }
            )));
        }
        if objective != Objective::LastManStanding && episode_ticks.is_none() {
            return Err(EngineError::Scenario(format!("{name}: solo scenarios need episode_ticks")));
        }
        let spawns = parsed.spawns[..players]
            .iter()
            .enumerate()
            .map(|(p, s)| s.ok_or_else(|| EngineError::Scenario(format!("{name}: no spawn for player {p}"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(extra) = parsed.spawns[players..].iter().flatten().next() {
            return Err(EngineError::Spawn {
                tile: *extra,
                reason: format!("{name}: spawn digit beyond player count {players}"),
            });
        }
        let limit = match episode_ticks {
            Some(t) => 2 * t,
            None => 2 * expected_length.1,
        };
        let mut config = GameConfig { tick_limit: limit, ..GameConfig::default() };
        if let Some(pairs) = overrides {
            config = config.with_overrides(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        }
        config.validate()?;
        Ok(ScenarioSpec {
            name: name.to_string(),
            map: parsed.map,
            spawns,
            objective,
            episode_ticks,
            expected_length,
            decorations,
            rules,
            config,
        })
    }

    pub fn players(&self) -> usize {
        self.spawns.len()
    }

    pub fn is_solo(&self) -> bool {
        self.objective != Objective::LastManStanding
    }

    /// Scatters `decorations` lumber pairs, mirrored through the map centre,
    /// on open tiles away from spawns. Placements that would split the spawns
    /// apart are skipped.
    pub(crate) fn decorate(&self, map: &mut TileMap, rng: &mut SplitMix64) {
        let (w, h) = (map.width(), map.height());
        for _ in 0..self.decorations {
            let i = rng.below(map.area() as u64) as usize;
            let p = map.pos_of(i);
            let q = Pos::new(w - 1 - p.x, h - 1 - p.y);
            let clear = |t: Pos| {
                map.tile(t).is_open_ground() && self.spawns.iter().all(|s| s.chebyshev(t) > 2)
            };
            if p == q || !clear(p) || !clear(q) {
                continue;
            }
            let lumber = Some(ResourceDeposit { kind: ResourceKind::Lumber, amount: DEFAULT_LUMBER_AMOUNT });
            map.tile_mut(p).resource = lumber;
            map.tile_mut(q).resource = lumber;
            if !spawns_connected(map, &self.spawns) {
                map.tile_mut(p).resource = None;
                map.tile_mut(q).resource = None;
            }
        }
    }

    /// Fresh game with the scenario's own configuration.
    pub fn new_game(&self, seed: u64) -> Result<GameState> {
        GameState::new_game(self.config.clone(), self, seed)
    }
}

fn spawns_connected(map: &TileMap, spawns: &[Pos]) -> bool {
    let Some(&start) = spawns.first() else { return true };
    let mut seen = vec![false; map.area()];
    seen[map.index(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        for n in cur.neighbors() {
            if map.in_bounds(n) && !seen[map.index(n)] && map.walkable(n) {
                seen[map.index(n)] = true;
                queue.push_back(n);
            }
        }
    }
    spawns.iter().all(|&s| seen[map.index(s)])
}

fn military_count(state: &GameState, player: usize) -> i64 {
    let rules = state.rules();
    state.entities_of(player).filter(|e| rules.is_military(e.archetype)).count() as i64
}

/// Per-step reward for `player` moving from `prev` to `next`.
pub fn scenario_reward(spec: &ScenarioSpec, prev: &GameState, next: &GameState, player: usize) -> f64 {
    let (Some(a), Some(b)) = (prev.player(player), next.player(player)) else {
        return 0.0;
    };
    match spec.objective {
        Objective::LastManStanding => match (prev.terminal(), next.terminal()) {
            (None, Some(outcome)) => match outcome.winner {
                Some(w) if w == player => 1.0,
                Some(_) => -1.0,
                None => 0.0,
            },
            _ => 0.0,
        },
        Objective::Score => (b.score - a.score) as f64,
        Objective::Resources => (b.harvested - a.harvested) as f64,
        Objective::Army => (military_count(next, player) - military_count(prev, player)) as f64,
    }
}

/// Whether the episode is over: engine terminal, or the solo episode length
/// has been reached.
pub fn scenario_done(spec: &ScenarioSpec, state: &GameState) -> bool {
    state.terminal().is_some() || spec.episode_ticks.is_some_and(|t| state.tick_count() >= t)
}
