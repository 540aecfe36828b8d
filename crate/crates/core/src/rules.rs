//! Archetype roster and economy constants, loaded from a structured-text data
//! file. The bundled roster lives in `data/archetypes.toml`.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

const BUNDLED_ROSTER: &str = include_str!("../data/archetypes.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArchetypeId(pub u8);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Unit,
    Building,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    pub name: String,
    pub kind: Kind,
    pub max_hp: i32,
    pub attack_damage: i32,
    #[serde(default)]
    pub speed_cost: Option<u32>,
    pub vision_radius: i32,
    pub gold_cost: i32,
    pub lumber_cost: i32,
    #[serde(default)]
    pub food_cost: i32,
    #[serde(default)]
    pub food_provided: i32,
    #[serde(default)]
    pub builds: Vec<String>,
}

impl Archetype {
    pub fn is_unit(&self) -> bool {
        self.kind == Kind::Unit
    }

    pub fn is_building(&self) -> bool {
        self.kind == Kind::Building
    }

    pub fn can_attack(&self) -> bool {
        self.attack_damage > 0
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterFile {
    harvest_yield: i32,
    start_gold: i32,
    start_lumber: i32,
    start_oil: i32,
    archetype: Vec<Archetype>,
}

/// Resolved roster: archetypes plus the index tables the engine needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rules {
    pub harvest_yield: i32,
    pub start_gold: i32,
    pub start_lumber: i32,
    pub start_oil: i32,
    archetypes: Vec<Archetype>,
    builds: Vec<Vec<ArchetypeId>>,
    worker: ArchetypeId,
    town_hall: ArchetypeId,
}

impl Rules {
    pub fn parse(text: &str) -> Result<Rules> {
        let file: RosterFile =
            toml::from_str(text).map_err(|e| EngineError::Config(format!("roster: {e}")))?;
        if file.archetype.is_empty() || file.archetype.len() > u8::MAX as usize {
            return Err(EngineError::Config("roster must list 1..255 archetypes".into()));
        }
        if file.harvest_yield <= 0 {
            return Err(EngineError::Config("harvest_yield must be positive".into()));
        }
        let index_of = |name: &str| -> Result<ArchetypeId> {
            file.archetype
                .iter()
                .position(|a| a.name == name)
                .map(|i| ArchetypeId(i as u8))
                .ok_or_else(|| EngineError::Config(format!("roster: unknown archetype '{name}'")))
        };
        for a in &file.archetype {
            if a.max_hp <= 0 {
                return Err(EngineError::Config(format!("{}: max_hp must be positive", a.name)));
            }
            if a.gold_cost < 0 || a.lumber_cost < 0 || a.food_cost < 0 || a.food_provided < 0 {
                return Err(EngineError::Config(format!("{}: costs must be non-negative", a.name)));
            }
            match a.kind {
                Kind::Building if a.speed_cost.is_some() => {
                    return Err(EngineError::Config(format!("{}: buildings cannot move", a.name)))
                }
                Kind::Unit if a.food_provided != 0 => {
                    return Err(EngineError::Config(format!("{}: units cannot provide food", a.name)))
                }
                Kind::Unit if a.speed_cost.is_none() => {
                    return Err(EngineError::Config(format!("{}: units need a speed_cost", a.name)))
                }
                _ => {}
            }
        }
        let builds = file
            .archetype
            .iter()
            .map(|a| a.builds.iter().map(|n| index_of(n)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let worker = index_of("Worker")?;
        let town_hall = index_of("TownHall")?;
        Ok(Rules {
            harvest_yield: file.harvest_yield,
            start_gold: file.start_gold,
            start_lumber: file.start_lumber,
            start_oil: file.start_oil,
            archetypes: file.archetype,
            builds,
            worker,
            town_hall,
        })
    }

    /// The roster shipped with the crate, parsed once.
    pub fn bundled() -> Arc<Rules> {
        static RULES: OnceLock<Arc<Rules>> = OnceLock::new();
        RULES
            .get_or_init(|| Arc::new(Rules::parse(BUNDLED_ROSTER).expect("bundled roster is valid")))
            .clone()
    }

    pub fn get(&self, id: ArchetypeId) -> &Archetype {
        &self.archetypes[id.0 as usize]
    }

    pub fn builds(&self, id: ArchetypeId) -> &[ArchetypeId] {
        &self.builds[id.0 as usize]
    }

    pub fn by_name(&self, name: &str) -> Option<ArchetypeId> {
        self.archetypes
            .iter()
            .position(|a| a.name == name)
            .map(|i| ArchetypeId(i as u8))
    }

    pub fn worker(&self) -> ArchetypeId {
        self.worker
    }

    pub fn town_hall(&self) -> ArchetypeId {
        self.town_hall
    }

    pub fn len(&self) -> usize {
        self.archetypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.archetypes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArchetypeId, &Archetype)> {
        self.archetypes
            .iter()
            .enumerate()
            .map(|(i, a)| (ArchetypeId(i as u8), a))
    }

    /// Units that fight but cannot build: the military roster.
    pub fn is_military(&self, id: ArchetypeId) -> bool {
        let a = self.get(id);
        a.is_unit() && a.can_attack() && self.builds(id).is_empty()
    }
}
