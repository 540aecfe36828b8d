//! The two action layers: 16 primitive actions routed to the selected entity
//! and 6 compound actions that expand into primitive sequences.

use serde::{Deserialize, Serialize};

use crate::map::Pos;
use crate::rules::ArchetypeId;
use crate::state::{Entity, EntityId, EntityState, GameState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum PrimitiveAction {
    MoveUp = 0,
    MoveDown = 1,
    MoveLeft = 2,
    MoveRight = 3,
    MoveUpLeft = 4,
    MoveUpRight = 5,
    MoveDownLeft = 6,
    MoveDownRight = 7,
    Attack = 8,
    Harvest = 9,
    Build0 = 10,
    Build1 = 11,
    Build2 = 12,
    NextUnit = 13,
    PrevUnit = 14,
    NoAction = 15,
}

impl PrimitiveAction {
    pub const COUNT: usize = 16;

    pub const ALL: [PrimitiveAction; 16] = [
        PrimitiveAction::MoveUp,
        PrimitiveAction::MoveDown,
        PrimitiveAction::MoveLeft,
        PrimitiveAction::MoveRight,
        PrimitiveAction::MoveUpLeft,
        PrimitiveAction::MoveUpRight,
        PrimitiveAction::MoveDownLeft,
        PrimitiveAction::MoveDownRight,
        PrimitiveAction::Attack,
        PrimitiveAction::Harvest,
        PrimitiveAction::Build0,
        PrimitiveAction::Build1,
        PrimitiveAction::Build2,
        PrimitiveAction::NextUnit,
        PrimitiveAction::PrevUnit,
        PrimitiveAction::NoAction,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u32) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveAction::MoveUp => "MoveUp",
            PrimitiveAction::MoveDown => "MoveDown",
            PrimitiveAction::MoveLeft => "MoveLeft",
            PrimitiveAction::MoveRight => "MoveRight",
            PrimitiveAction::MoveUpLeft => "MoveUpLeft",
            PrimitiveAction::MoveUpRight => "MoveUpRight",
            PrimitiveAction::MoveDownLeft => "MoveDownLeft",
            PrimitiveAction::MoveDownRight => "MoveDownRight",
            PrimitiveAction::Attack => "Attack",
            PrimitiveAction::Harvest => "Harvest",
            PrimitiveAction::Build0 => "Build0",
            PrimitiveAction::Build1 => "Build1",
            PrimitiveAction::Build2 => "Build2",
            PrimitiveAction::NextUnit => "NextUnit",
            PrimitiveAction::PrevUnit => "PrevUnit",
            PrimitiveAction::NoAction => "NoAction",
        }
    }

    /// Tile offset for the eight move actions (y grows downwards).
    pub fn direction(self) -> Option<(i32, i32)> {
        Some(match self {
            PrimitiveAction::MoveUp => (0, -1),
            PrimitiveAction::MoveDown => (0, 1),
            PrimitiveAction::MoveLeft => (-1, 0),
            PrimitiveAction::MoveRight => (1, 0),
            PrimitiveAction::MoveUpLeft => (-1, -1),
            PrimitiveAction::MoveUpRight => (1, -1),
            PrimitiveAction::MoveDownLeft => (-1, 1),
            PrimitiveAction::MoveDownRight => (1, 1),
            _ => return None,
        })
    }

    pub fn from_direction(dx: i32, dy: i32) -> Option<Self> {
        Self::ALL[..8].iter().copied().find(|a| a.direction() == Some((dx, dy)))
    }

    /// Index into the selected entity's build/train list.
    pub fn build_slot(self) -> Option<usize> {
        match self {
            PrimitiveAction::Build0 => Some(0),
            PrimitiveAction::Build1 => Some(1),
            PrimitiveAction::Build2 => Some(2),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum CompoundAction {
    HarvestNearestResource = 0,
    AttackNearestEnemy = 1,
    BuildTownHall = 2,
    BuildBarracks = 3,
    TrainOrBuildArmy = 4,
    ExpandTowardOpponent = 5,
}

impl CompoundAction {
    pub const COUNT: usize = 6;

    pub const ALL: [CompoundAction; 6] = [
        CompoundAction::HarvestNearestResource,
        CompoundAction::AttackNearestEnemy,
        CompoundAction::BuildTownHall,
        CompoundAction::BuildBarracks,
        CompoundAction::TrainOrBuildArmy,
        CompoundAction::ExpandTowardOpponent,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u32) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CompoundAction::HarvestNearestResource => "HarvestNearestResource",
            CompoundAction::AttackNearestEnemy => "AttackNearestEnemy",
            CompoundAction::BuildTownHall => "BuildTownHall",
            CompoundAction::BuildBarracks => "BuildBarracks",
            CompoundAction::TrainOrBuildArmy => "TrainOrBuildArmy",
            CompoundAction::ExpandTowardOpponent => "ExpandTowardOpponent",
        }
    }
}

/// Either layer, as issued by an agent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "layer", content = "action", rename_all = "snake_case")]
pub enum AnyAction {
    Primitive(PrimitiveAction),
    Compound(CompoundAction),
}

impl From<PrimitiveAction> for AnyAction {
    fn from(a: PrimitiveAction) -> Self {
        AnyAction::Primitive(a)
    }
}

impl From<CompoundAction> for AnyAction {
    fn from(a: CompoundAction) -> Self {
        AnyAction::Compound(a)
    }
}

/// Primitive actions that would not resolve to a no-op, in id order.
/// `NoAction` is always present.
pub fn legal_actions(state: &GameState, player: usize) -> Vec<PrimitiveAction> {
    if player >= state.num_players() {
        return vec![PrimitiveAction::NoAction];
    }
    PrimitiveAction::ALL
        .into_iter()
        .filter(|&a| state.plan_primitive(player, a).is_some())
        .collect()
}

/// Expands a compound action into the primitive sequence that achieves it
/// from the current state, selection changes included. The plan is computed
/// once; an empty list means nothing applicable exists.
pub fn expand_compound(state: &GameState, player: usize, action: CompoundAction) -> Vec<PrimitiveAction> {
    if player >= state.num_players() || !state.players()[player].alive || state.terminal().is_some() {
        return Vec::new();
    }
    let planner = Planner { state, player };
    planner.expand(action).unwrap_or_default()
}

struct Planner<'a> {
    state: &'a GameState,
    player: usize,
}

impl Planner<'_> {
    fn rules(&self) -> &crate::rules::Rules {
        self.state.rules()
    }

    fn owned(&self) -> impl Iterator<Item = &Entity> + '_ {
        self.state.entities_of(self.player)
    }

    fn selected(&self) -> Option<&Entity> {
        self.state.players()[self.player].selected.and_then(|id| self.state.live_entity(id))
    }

    fn owns(&self, archetype: ArchetypeId) -> bool {
        self.owned().any(|e| e.archetype == archetype)
    }

    fn affordable(&self, archetype: ArchetypeId) -> bool {
        let a = self.rules().get(archetype);
        let r = &self.state.players()[self.player].resources;
        r.gold >= a.gold_cost && r.lumber >= a.lumber_cost
    }

    fn can_command(e: &Entity) -> bool {
        !matches!(e.state, EntityState::Spawning | EntityState::Building | EntityState::Dead)
    }

    /// Picks the unit to act with, preferring idle units and, among equals,
    /// the current selection, then the lowest id.
    fn pick(&self, qualifies: impl Fn(&Entity) -> bool) -> Option<EntityId> {
        let ok = |e: &Entity| qualifies(e) && Self::can_command(e);
        let selected = self.selected().filter(|e| ok(e));
        if let Some(sel) = selected.filter(|e| e.state == EntityState::Idle) {
            return Some(sel.id);
        }
        if let Some(idle) = self.owned().find(|e| ok(e) && e.state == EntityState::Idle) {
            return Some(idle.id);
        }
        selected.or_else(|| self.owned().find(|e| ok(e))).map(|e| e.id)
    }

    /// NextUnit presses that move the selection onto `target`.
    fn select(&self, target: EntityId) -> Vec<PrimitiveAction> {
        let owned: Vec<EntityId> = self.owned().map(|e| e.id).collect();
        let Some(goal) = owned.iter().position(|&id| id == target) else {
            return Vec::new();
        };
        let presses = match self.selected().and_then(|s| owned.iter().position(|&id| id == s.id)) {
            Some(cur) => (goal + owned.len() - cur) % owned.len(),
            None => goal + 1,
        };
        vec![PrimitiveAction::NextUnit; presses]
    }

    fn moves(from: Pos, path: &[Pos]) -> Vec<PrimitiveAction> {
        let mut at = from;
        path.iter()
            .map(|&p| {
                let step = PrimitiveAction::from_direction(p.x - at.x, p.y - at.y).expect("adjacent step");
                at = p;
                step
            })
            .collect()
    }

    fn path_for(&self, unit: EntityId, goal: impl Fn(Pos) -> bool) -> Option<Vec<Pos>> {
        let i = self.state.index_of(unit)?;
        self.state.bfs_to(i, goal)
    }

    fn worker_builds(&self, slot: usize, guard_owned: bool) -> Option<Vec<PrimitiveAction>> {
        let worker = self.rules().worker();
        let made = *self.rules().builds(worker).get(slot)?;
        if (guard_owned && self.owns(made)) || !self.affordable(made) {
            return None;
        }
        let unit = self.pick(|e| e.archetype == worker)?;
        let pos = self.state.entity(unit)?.pos;
        self.state.free_neighbor(pos)?;
        let mut seq = self.select(unit);
        seq.push(build_action(slot));
        Some(seq)
    }

    fn expand(&self, action: CompoundAction) -> Option<Vec<PrimitiveAction>> {
        let state = self.state;
        let worker = self.rules().worker();
        match action {
            CompoundAction::HarvestNearestResource => {
                let unit = self.pick(|e| e.archetype == worker)?;
                let has_deposit = |p: Pos| {
                    p.neighbors().any(|n| {
                        state.map().get(n).and_then(|t| t.resource).is_some_and(|r| r.amount > 0)
                    })
                };
                let path = self.path_for(unit, has_deposit)?;
                let mut seq = self.select(unit);
                seq.extend(Self::moves(state.entity(unit)?.pos, &path));
                seq.push(PrimitiveAction::Harvest);
                Some(seq)
            }
            CompoundAction::AttackNearestEnemy => {
                let rules = self.rules();
                let unit = self
                    .pick(|e| rules.is_military(e.archetype))
                    .or_else(|| self.pick(|e| rules.get(e.archetype).is_unit() && rules.get(e.archetype).can_attack()))?;
                let me = self.player;
                let enemies: Vec<&Entity> = state
                    .entities()
                    .filter(|e| e.owner != me && state.can_see(me, e.pos))
                    .collect();
                // Units decide the game, so they are hunted before buildings.
                let units: Vec<Pos> =
                    enemies.iter().filter(|e| rules.get(e.archetype).is_unit()).map(|e| e.pos).collect();
                let buildings: Vec<Pos> =
                    enemies.iter().filter(|e| rules.get(e.archetype).is_building()).map(|e| e.pos).collect();
                let near = |targets: &[Pos]| {
                    if targets.is_empty() {
                        return None;
                    }
                    self.path_for(unit, |p| targets.iter().any(|t| t.chebyshev(p) <= 1))
                };
                let path = near(&units).or_else(|| near(&buildings))?;
                let mut seq = self.select(unit);
                seq.extend(Self::moves(state.entity(unit)?.pos, &path));
                seq.push(PrimitiveAction::Attack);
                Some(seq)
            }
            CompoundAction::BuildTownHall => self.worker_slot_of(self.rules().town_hall(), true),
            CompoundAction::BuildBarracks => {
                let barracks = self.rules().by_name("Barracks")?;
                self.worker_slot_of(barracks, false)
            }
            CompoundAction::TrainOrBuildArmy => {
                let rules = self.rules();
                let trainer = self.owned().find(|e| {
                    e.state == EntityState::Idle
                        && rules.builds(e.archetype).first().is_some_and(|&m| rules.is_military(m))
                });
                if let Some(b) = trainer {
                    let made = rules.builds(b.archetype)[0];
                    let r = &state.players()[self.player].resources;
                    let food_ok = r.food_used + rules.get(made).food_cost <= r.food_cap;
                    if food_ok && self.affordable(made) && state.free_neighbor(b.pos).is_some() {
                        let mut seq = self.select(b.id);
                        seq.push(PrimitiveAction::Build0);
                        return Some(seq);
                    }
                    if !food_ok {
                        let farm = rules.by_name("Farm")?;
                        return self.worker_slot_of(farm, false);
                    }
                    return None;
                }
                let barracks = rules.by_name("Barracks")?;
                if self.owns(barracks) {
                    return None;
                }
                self.worker_slot_of(barracks, false)
            }
            CompoundAction::ExpandTowardOpponent => {
                let farm = self.rules().by_name("Farm")?;
                let slot = self.rules().builds(worker).iter().position(|&m| m == farm)?;
                if !self.affordable(farm) {
                    return None;
                }
                let unit = self.pick(|e| e.archetype == worker)?;
                let from = state.entity(unit)?.pos;
                let me = self.player;
                let spawn = state
                    .players()
                    .iter()
                    .enumerate()
                    .filter(|&(p, pl)| p != me && pl.alive)
                    .map(|(_, pl)| pl.spawn)
                    .min_by_key(|s| (s.chebyshev(from), s.y, s.x))?;
                let path = self.path_for(unit, |p| p.chebyshev(spawn) <= 1).unwrap_or_default();
                let steps = &path[..path.len().min(EXPAND_STEPS)];
                let stand = steps.last().copied().unwrap_or(from);
                // The farm goes on the first free tile around the stand tile
                // (the vacated tile counts once the unit has left it).
                let placeable = stand.neighbors().any(|n| n == from || state.map().is_free(n));
                if !placeable {
                    return None;
                }
                let mut seq = self.select(unit);
                seq.extend(Self::moves(from, steps));
                seq.push(build_action(slot));
                Some(seq)
            }
        }
    }

    fn worker_slot_of(&self, made: ArchetypeId, guard_owned: bool) -> Option<Vec<PrimitiveAction>> {
        let slot = self.rules().builds(self.rules().worker()).iter().position(|&m| m == made)?;
        self.worker_builds(slot, guard_owned)
    }
}

/// Tiles a worker walks toward the opponent before placing a farm.
const EXPAND_STEPS: usize = 3;

fn build_action(slot: usize) -> PrimitiveAction {
    [PrimitiveAction::Build0, PrimitiveAction::Build1, PrimitiveAction::Build2][slot]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodings_are_dense_and_stable() {
        for (i, a) in PrimitiveAction::ALL.iter().enumerate() {
            assert_eq!(a.id() as usize, i);
            assert_eq!(PrimitiveAction::from_id(i as u32), Some(*a));
        }
        assert_eq!(PrimitiveAction::from_id(16), None);
        for (i, a) in CompoundAction::ALL.iter().enumerate() {
            assert_eq!(a.id() as usize, i);
        }
        assert_eq!(CompoundAction::from_id(6), None);
        assert_eq!(PrimitiveAction::MoveRight.id(), 3);
        assert_eq!(PrimitiveAction::NoAction.id(), 15);
    }

    #[test]
    fn directions_round_trip() {
        for a in &PrimitiveAction::ALL[..8] {
            let (dx, dy) = a.direction().unwrap();
            assert_eq!(PrimitiveAction::from_direction(dx, dy), Some(*a));
        }
        assert_eq!(PrimitiveAction::Attack.direction(), None);
        assert_eq!(PrimitiveAction::from_direction(0, 0), None);
    }
}
