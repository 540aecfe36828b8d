//! Engine configuration: mechanics flags, tick constants and resource limits.

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

pub const MAX_FOOD_LIMIT: i32 = 6000;
pub const MAX_UNIT_LIMIT: i32 = 2000;
pub const MAX_RESOURCE_CAP: i32 = 1_000_000;

/// Path-finding algorithm used for routed movement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathAlgorithm {
    #[default]
    Jps,
    Bfs,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    /// Spawn a Town-Hall next to every starting Worker.
    pub instant_town_hall: bool,
    /// Buildings and trained units complete on the next tick.
    pub instant_building: bool,
    /// Moves complete on the next tick.
    pub instant_walking: bool,
    /// Workers whose resource tile runs dry walk to the nearest tile of the same kind.
    pub harvest_forever: bool,
    /// Units retaliate when attacked.
    pub auto_attack: bool,
    /// When false every action completes on the next tick.
    pub durative: bool,
    /// When false, routed movement steps greedily instead of searching.
    pub pathfinding_enabled: bool,
    pub pathfinder: PathAlgorithm,
    /// Maintain per-player visibility every tick.
    pub fog_of_war: bool,
    /// Ticks per move step, attack and harvest cycle.
    pub tick_action_cost: u32,
    /// Ticks to construct a building; units train in a tenth of this.
    pub tick_build_cost: u32,
    /// Real-time pacing multiplier. Headless stepping ignores it.
    pub ticks_per_second: u32,
    /// Reaching this tick ends the game in a draw.
    pub tick_limit: u64,
    pub food_limit: i32,
    pub unit_limit: i32,
    pub resource_cap: i32,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            instant_town_hall: false,
            instant_building: false,
            instant_walking: false,
            harvest_forever: false,
            auto_attack: true,
            durative: true,
            pathfinding_enabled: true,
            pathfinder: PathAlgorithm::Jps,
            fog_of_war: false,
            tick_action_cost: 10,
            tick_build_cost: 300,
            ticks_per_second: 10,
            tick_limit: 2600,
            food_limit: MAX_FOOD_LIMIT,
            unit_limit: MAX_UNIT_LIMIT,
            resource_cap: MAX_RESOURCE_CAP,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(EngineError::Config(msg));
        if self.tick_action_cost == 0 {
            return fail("tick_action_cost must be positive".into());
        }
        if self.tick_action_cost > self.tick_build_cost {
            return fail(format!(
                "tick_action_cost ({}) must not exceed tick_build_cost ({})",
                self.tick_action_cost, self.tick_build_cost
            ));
        }
        if self.ticks_per_second == 0 {
            return fail("ticks_per_second must be positive".into());
        }
        if self.tick_limit == 0 {
            return fail("tick_limit must be positive".into());
        }
        if !(0..=MAX_FOOD_LIMIT).contains(&self.food_limit) {
            return fail(format!("food_limit must lie in [0, {MAX_FOOD_LIMIT}]"));
        }
        if !(0..=MAX_UNIT_LIMIT).contains(&self.unit_limit) {
            return fail(format!("unit_limit must lie in [0, {MAX_UNIT_LIMIT}]"));
        }
        if !(0..=MAX_RESOURCE_CAP).contains(&self.resource_cap) {
            return fail(format!("resource_cap must lie in [0, {MAX_RESOURCE_CAP}]"));
        }
        Ok(())
    }

    /// Ticks a single move step takes for a unit with the given speed cost.
    pub fn walk_ticks(&self, speed_cost: u32) -> u32 {
        if self.instant_walking || !self.durative {
            1
        } else {
            self.tick_action_cost * speed_cost.max(1)
        }
    }

    pub fn action_ticks(&self) -> u32 {
        if self.durative {
            self.tick_action_cost
        } else {
            1
        }
    }

    pub fn build_ticks(&self) -> u32 {
        if self.instant_building || !self.durative {
            1
        } else {
            self.tick_build_cost
        }
    }

    pub fn train_ticks(&self) -> u32 {
        if self.instant_building || !self.durative {
            1
        } else {
            (self.tick_build_cost / 10).max(1)
        }
    }

    /// Applies `key=value` overrides; keys map 1:1 onto the fields above.
    ///
    /// Overriding a tick constant while `durative` ends up false is rejected:
    /// non-durative mode ignores tick constants, so the combination is a
    /// configuration mistake.
    pub fn with_overrides<'a, I>(&self, overrides: I) -> Result<GameConfig>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut map = match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(map)) => map,
            _ => unreachable!("GameConfig serializes to an object"),
        };
        let mut touched_ticks = false;
        for (key, raw) in overrides {
            let key = key.trim();
            let current = map
                .get(key)
                .ok_or_else(|| EngineError::Config(format!("unknown config key '{key}'")))?;
            let value = parse_override(key, raw.trim(), current)?;
            if matches!(key, "tick_action_cost" | "tick_build_cost") {
                touched_ticks = true;
            }
            map.insert(key.to_string(), value);
        }
        let config: GameConfig = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| EngineError::Config(e.to_string()))?;
        if touched_ticks && !config.durative {
            return Err(EngineError::Config(
                "tick cost overrides have no effect with durative=false".into(),
            ));
        }
        config.validate()?;
        Ok(config)
    }

    /// Parses `key=value` strings as given on the command line.
    pub fn parse_override_pairs(pairs: &[String]) -> Result<Vec<(String, String)>> {
        pairs
            .iter()
            .map(|pair| {
                pair.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| EngineError::Config(format!("expected key=value, got '{pair}'")))
            })
            .collect()
    }
}

fn parse_override(key: &str, raw: &str, current: &serde_json::Value) -> Result<serde_json::Value> {
    let bad = || EngineError::Config(format!("invalid value '{raw}' for '{key}'"));
    Ok(match current {
        serde_json::Value::Bool(_) => match raw {
            "true" | "1" | "on" | "yes" => true.into(),
            "false" | "0" | "off" | "no" => false.into(),
            _ => return Err(bad()),
        },
        serde_json::Value::Number(_) => raw.parse::<i64>().map_err(|_| bad())?.into(),
        serde_json::Value::String(_) => raw.into(),
        _ => return Err(bad()),
    })
}
