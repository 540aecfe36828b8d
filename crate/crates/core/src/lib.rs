//! Deterministic tick-based real-time strategy simulator.
//!
//! The engine advances a [`GameState`] one tick at a time. Every action is
//! bound to a per-entity tick timer, entities update in ascending id order,
//! and all randomness flows from one seeded generator, so a seed plus an
//! action log reproduces a game exactly.

pub mod actions;
pub mod agents;
pub mod bench;
pub mod config;
pub mod digest;
pub mod engine;
pub mod env;
pub mod error;
pub mod map;
pub mod observation;
pub mod pathfinding;
pub mod rng;
pub mod rules;
pub mod scenarios;
pub mod session;
pub mod state;

pub use actions::{expand_compound, legal_actions, AnyAction, CompoundAction, PrimitiveAction};
pub use config::{GameConfig, PathAlgorithm};
pub use engine::ActionOutcome;
pub use error::{EngineError, Result};
pub use map::{Pos, ResourceKind, Terrain, TileMap};
pub use rules::{ArchetypeId, Rules};
pub use scenarios::{load_scenario, scenario_done, scenario_names, scenario_reward, Objective, ScenarioSpec};
pub use state::{Entity, EntityId, EntityState, GameState, Outcome, Player, ResourceBag, TickStatus, TickTimer};
pub use agents::{make_agent, Agent, AGENT_NAMES};
pub use env::{ActionLayer, Env, EnvOptions, StepResult};
pub use observation::{raw_tensor, Observation};
pub use session::{play_match, replay, MatchResult, Session, Transcript};
