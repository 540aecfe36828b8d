//! Game state: entities, players, resources and the state digest.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::GameConfig;
use crate::digest::Fnv64;
use crate::map::{Pos, TileMap};
use crate::rng::SplitMix64;
use crate::rules::{ArchetypeId, Rules};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityState {
    Spawning,
    Idle,
    Walking,
    Harvesting,
    Building,
    Combat,
    Dead,
}

impl EntityState {
    pub const ALL: [EntityState; 7] = [
        EntityState::Spawning,
        EntityState::Idle,
        EntityState::Walking,
        EntityState::Harvesting,
        EntityState::Building,
        EntityState::Combat,
        EntityState::Dead,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            EntityState::Spawning => "spawning",
            EntityState::Idle => "idle",
            EntityState::Walking => "walking",
            EntityState::Harvesting => "harvesting",
            EntityState::Building => "building",
            EntityState::Combat => "combat",
            EntityState::Dead => "dead",
        }
    }

    /// Whether the state machine may move an entity from `self` to `next`.
    pub fn can_transition_to(self, next: EntityState) -> bool {
        use EntityState::*;
        match (self, next) {
            (a, b) if a == b => a != Dead || b == Dead,
            (Dead, _) => false,
            (Spawning, Idle) | (Spawning, Dead) => true,
            (Spawning, _) => false,
            (_, Spawning) => false,
            // Builders only leave the site when done, killed or retaliating.
            (Building, Idle | Combat | Dead) => true,
            (Building, _) => false,
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TickTimer {
    pub remaining: u32,
    pub total: u32,
}

impl TickTimer {
    pub fn new(total: u32) -> Self {
        debug_assert!(total > 0);
        TickTimer { remaining: total, total }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    Entity(EntityId),
    Resource(Pos),
}

/// Where routed movement is heading.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Goal {
    /// Stand on this exact tile.
    Tile(Pos),
    /// Stand on any tile within Chebyshev distance 1 of this one.
    Near(Pos),
}

impl Goal {
    pub fn reached(self, at: Pos) -> bool {
        match self {
            Goal::Tile(p) => at == p,
            Goal::Near(p) => at.chebyshev(p) <= 1,
        }
    }

    pub fn anchor(self) -> Pos {
        match self {
            Goal::Tile(p) | Goal::Near(p) => p,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entity {
    pub id: EntityId,
    pub owner: usize,
    pub archetype: ArchetypeId,
    pub pos: Pos,
    pub hp: i32,
    pub state: EntityState,
    pub timer: Option<TickTimer>,
    /// Remaining steps, next step last.
    pub(crate) route: Vec<Pos>,
    pub goal: Option<Goal>,
    pub target: Option<Target>,
    pub last_attacker: Option<EntityId>,
}

impl Entity {
    pub fn is_alive(&self) -> bool {
        self.state != EntityState::Dead
    }

    /// Remaining path in travel order.
    pub fn path(&self) -> impl Iterator<Item = Pos> + '_ {
        self.route.iter().rev().copied()
    }

    pub fn path_len(&self) -> usize {
        self.route.len()
    }

    pub(crate) fn set_path(&mut self, path_in_order: Vec<Pos>) {
        self.route = path_in_order;
        self.route.reverse();
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceBag {
    pub gold: i32,
    pub lumber: i32,
    pub oil: i32,
    pub food_used: i32,
    pub food_cap: i32,
    pub unit_count: i32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Player {
    pub resources: ResourceBag,
    pub selected: Option<EntityId>,
    pub score: i64,
    pub alive: bool,
    /// Total amount ever taken from resource tiles.
    pub harvested: i64,
    /// Food provided by completed buildings (before the food limit).
    pub food_supply: i32,
    pub spawn: Pos,
}

impl Player {
    /// Keeps `food_cap` at the usable supply but never below current usage.
    pub(crate) fn refresh_food_cap(&mut self, food_limit: i32) {
        let bag = &mut self.resources;
        bag.food_cap = self.food_supply.min(food_limit).max(bag.food_used);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub winner: Option<usize>,
}

/// Result of advancing the engine one tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TickStatus {
    Advanced,
    /// The game was already over; nothing changed.
    AlreadyTerminal,
}

#[derive(Clone, Debug)]
pub struct GameState {
    pub(crate) config: GameConfig,
    pub(crate) rules: Arc<Rules>,
    pub(crate) map: TileMap,
    pub(crate) players: Vec<Player>,
    /// Ascending by id. Dead entities linger until the end of the tick.
    pub(crate) entities: Vec<Entity>,
    pub(crate) next_id: u32,
    pub(crate) tick: u64,
    pub(crate) rng: SplitMix64,
    pub(crate) terminal: Option<Outcome>,
    pub(crate) episode_ticks: Option<u64>,
    /// Per-player visibility counts, maintained only with fog of war.
    pub(crate) vision: Vec<Vec<u8>>,
}

impl GameState {
    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn map(&self) -> &TileMap {
        &self.map
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn terminal(&self) -> Option<Outcome> {
        self.terminal
    }

    pub fn episode_ticks(&self) -> Option<u64> {
        self.episode_ticks
    }

    pub fn rng_state(&self) -> u64 {
        self.rng.state()
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn player(&self, index: usize) -> Option<&Player> {
        self.players.get(index)
    }

    /// Direct access for scenario setup and tests. The engine re-clamps
    /// resources on the next tick.
    pub fn player_mut(&mut self, index: usize) -> Option<&mut Player> {
        self.players.get_mut(index)
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    /// Live entities in ascending id order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> + '_ {
        self.entities.iter().filter(|e| e.is_alive())
    }

    pub fn entities_of(&self, player: usize) -> impl Iterator<Item = &Entity> + '_ {
        self.entities().filter(move |e| e.owner == player)
    }

    pub(crate) fn index_of(&self, id: EntityId) -> Option<usize> {
        self.entities.binary_search_by_key(&id, |e| e.id).ok()
    }

    /// Looks up an entity (including one killed during the current tick).
    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.index_of(id).map(|i| &self.entities[i])
    }

    pub fn live_entity(&self, id: EntityId) -> Option<&Entity> {
        self.entity(id).filter(|e| e.is_alive())
    }

    pub fn entity_at(&self, p: Pos) -> Option<&Entity> {
        self.map.get(p)?.occupant.and_then(|id| self.live_entity(id))
    }

    /// Stable digest over the tick counter, every entity field in id order,
    /// every player's resources, map resource amounts and the RNG state.
    pub fn state_hash(&self) -> u64 {
        let mut h = Fnv64::default();
        h.u64(self.tick).u64(self.rng.state());
        match self.terminal {
            None => h.bytes(&[0]),
            Some(Outcome { winner: None }) => h.bytes(&[1]),
            Some(Outcome { winner: Some(w) }) => h.bytes(&[2]).u64(w as u64),
        };
        h.u64(self.entities.len() as u64);
        for e in &self.entities {
            h.u32(e.id.0)
                .u64(e.owner as u64)
                .bytes(&[e.archetype.0, e.state.id()])
                .i32(e.pos.x)
                .i32(e.pos.y)
                .i32(e.hp);
            match e.timer {
                Some(t) => h.u32(t.remaining).u32(t.total),
                None => h.u32(u32::MAX),
            };
            h.u64(e.route.len() as u64);
            for p in &e.route {
                h.i32(p.x).i32(p.y);
            }
            match e.target {
                None => h.bytes(&[0]),
                Some(Target::Entity(id)) => h.bytes(&[1]).u32(id.0),
                Some(Target::Resource(p)) => h.bytes(&[2]).i32(p.x).i32(p.y),
            };
            match e.goal {
                None => h.bytes(&[0]),
                Some(Goal::Tile(p)) => h.bytes(&[1]).i32(p.x).i32(p.y),
                Some(Goal::Near(p)) => h.bytes(&[2]).i32(p.x).i32(p.y),
            };
        }
        for p in &self.players {
            let r = &p.resources;
            h.i32(r.gold)
                .i32(r.lumber)
                .i32(r.oil)
                .i32(r.food_used)
                .i32(r.food_cap)
                .i32(r.unit_count)
                .i64(p.score)
                .i64(p.harvested)
                .i32(p.food_supply)
                .u32(p.selected.map_or(u32::MAX, |id| id.0))
                .bytes(&[p.alive as u8]);
        }
        h.u64(self.map.digest());
        h.finish()
    }
}
