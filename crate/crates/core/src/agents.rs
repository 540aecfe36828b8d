//! Built-in baseline policies and the agent registry.

use crate::actions::{expand_compound, legal_actions, AnyAction, CompoundAction, PrimitiveAction};
use crate::error::{EngineError, Result};
use crate::rng::SplitMix64;
use crate::state::{EntityState, GameState};

/// A policy consulted at decision points. Compound actions are expanded by
/// the caller.
pub trait Agent: Send {
    fn name(&self) -> &'static str;
    fn act(&mut self, state: &GameState, player: usize) -> AnyAction;
}

pub const AGENT_NAMES: [&str; 3] = ["random", "rule_based", "noop"];

/// Builds a registered agent. `seed` only matters for agents that sample.
pub fn make_agent(name: &str, seed: u64) -> Result<Box<dyn Agent>> {
    match name {
        "random" => Ok(Box::new(RandomAgent::new(seed))),
        "rule_based" => Ok(Box::new(RuleBasedAgent::default())),
        "noop" => Ok(Box::new(NoopAgent)),
        other => Err(EngineError::UnknownAgent(other.to_string())),
    }
}

pub struct NoopAgent;

impl Agent for NoopAgent {
    fn name(&self) -> &'static str {
        "noop"
    }

    fn act(&mut self, _: &GameState, _: usize) -> AnyAction {
        PrimitiveAction::NoAction.into()
    }
}

/// Uniform over the legal primitive actions, drawing from its own generator.
pub struct RandomAgent {
    rng: SplitMix64,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent { rng: SplitMix64::new(seed) }
    }
}

pub fn random_action(state: &GameState, player: usize, rng: &mut SplitMix64) -> PrimitiveAction {
    let legal = legal_actions(state, player);
    legal[rng.below(legal.len() as u64) as usize]
}

impl Agent for RandomAgent {
    fn name(&self) -> &'static str {
        "random"
    }

    fn act(&mut self, state: &GameState, player: usize) -> AnyAction {
        random_action(state, player, &mut self.rng).into()
    }
}

/// Economy thresholds of the scripted opponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleThresholds {
    pub town_halls: usize,
    pub farms: usize,
    pub workers: usize,
    pub banked_gold: i32,
    /// Simulated seconds before the military phase starts.
    pub military_seconds: u64,
}

impl Default for RuleThresholds {
    fn default() -> Self {
        RuleThresholds { town_halls: 1, farms: 2, workers: 3, banked_gold: 500, military_seconds: 600 }
    }
}

/// Scripted opponent: secure a Town-Hall, keep workers harvesting, expand
/// with farms toward the nearest opponent, then raise and send an army.
#[derive(Clone, Copy, Debug, Default)]
pub struct RuleBasedAgent {
    pub thresholds: RuleThresholds,
}

impl Agent for RuleBasedAgent {
    fn name(&self) -> &'static str {
        "rule_based"
    }

    fn act(&mut self, state: &GameState, player: usize) -> AnyAction {
        rule_based_action(state, player, &self.thresholds)
    }
}

/// First tick of the military phase. The nominal start is clamped to a
/// quarter of the tick limit so that short games still reach it.
pub fn military_start(state: &GameState, t: &RuleThresholds) -> u64 {
    let config = state.config();
    (t.military_seconds * config.ticks_per_second as u64).min(config.tick_limit / 4)
}

/// The scripted policy as a pure function of the state.
pub fn rule_based_action(state: &GameState, player: usize, t: &RuleThresholds) -> AnyAction {
    use CompoundAction::*;
    let Some(me) = state.player(player).filter(|p| p.alive) else {
        return PrimitiveAction::NoAction.into();
    };
    let rules = state.rules();
    let (worker, town_hall) = (rules.worker(), rules.town_hall());
    let farm = rules.by_name("Farm");
    let barracks = rules.by_name("Barracks");
    let count = |a: Option<_>| state.entities_of(player).filter(|e| Some(e.archetype) == a).count();
    let idle = |pred: &dyn Fn(&crate::state::Entity) -> bool| {
        state.entities_of(player).any(|e| e.state == EntityState::Idle && pred(e))
    };
    let try_compound = |c: CompoundAction| (!expand_compound(state, player, c).is_empty()).then_some(AnyAction::Compound(c));

    if count(Some(town_hall)) < t.town_halls {
        if let Some(a) = try_compound(BuildTownHall) {
            return a;
        }
    }
    if idle(&|e| e.archetype == worker) {
        if let Some(a) = try_compound(HarvestNearestResource) {
            return a;
        }
    }
    if count(Some(worker)) < t.workers {
        // Cycle the selection onto an idle Town-Hall, then train.
        let hall = state
            .entities_of(player)
            .find(|e| e.archetype == town_hall && e.state == EntityState::Idle);
        if let Some(hall) = hall {
            let cost = rules.get(worker);
            let r = &me.resources;
            let trainable = r.gold >= cost.gold_cost
                && r.food_used + cost.food_cost <= r.food_cap
                && state.free_neighbor(hall.pos).is_some();
            if trainable {
                return if me.selected == Some(hall.id) {
                    PrimitiveAction::Build0.into()
                } else {
                    PrimitiveAction::NextUnit.into()
                };
            }
        }
    }
    let military = state.tick_count() >= military_start(state, t);
    if count(farm) < t.farms && !military {
        if let Some(a) = try_compound(ExpandTowardOpponent) {
            return a;
        }
    }
    if military {
        if idle(&|e| rules.is_military(e.archetype)) {
            if let Some(a) = try_compound(AttackNearestEnemy) {
                return a;
            }
        }
        if count(barracks) == 0 {
            if let Some(a) = try_compound(BuildBarracks) {
                return a;
            }
        }
        if let Some(a) = try_compound(TrainOrBuildArmy) {
            return a;
        }
        return PrimitiveAction::NoAction.into();
    }
    if me.resources.gold >= t.banked_gold + 200 && count(farm) < 2 * t.farms {
        if let Some(a) = try_compound(ExpandTowardOpponent) {
            return a;
        }
    }
    PrimitiveAction::NoAction.into()
}
