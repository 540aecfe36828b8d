//! Gym-style episodic interface: one externally controlled player, the rest
//! driven by in-process agents.

use serde::{Deserialize, Serialize};

use crate::actions::{AnyAction, CompoundAction, PrimitiveAction};
use crate::agents::{make_agent, Agent};
use crate::config::GameConfig;
use crate::error::{EngineError, Result};
use crate::observation::{raw_tensor, Observation, CHANNELS};
use crate::rng::SplitMix64;
use crate::scenarios::{scenario_done, scenario_reward, ScenarioSpec};
use crate::session::{Session, DEFAULT_FRAME_SKIP};
use crate::state::{GameState, ResourceBag};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionLayer {
    #[default]
    Primitive,
    Compound,
}

#[derive(Clone, Debug)]
pub struct EnvOptions {
    pub layer: ActionLayer,
    pub frame_skip: u32,
    /// One agent name per opponent (players 1..n).
    pub opponents: Vec<String>,
    /// Mask the observation to player 0's vision.
    pub fog: bool,
    /// `key=value` overrides applied on top of the scenario configuration.
    pub overrides: Vec<(String, String)>,
}

impl Default for EnvOptions {
    fn default() -> Self {
        EnvOptions {
            layer: ActionLayer::Primitive,
            frame_skip: DEFAULT_FRAME_SKIP,
            opponents: Vec::new(),
            fog: false,
            overrides: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spaces {
    pub action_count: usize,
    pub observation_shape: [usize; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerInfo {
    pub score: i64,
    pub resources: ResourceBag,
    pub alive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub tick: u64,
    pub action_ignored: bool,
    pub players: Vec<PlayerInfo>,
    pub winner: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

pub struct Env {
    spec: ScenarioSpec,
    config: GameConfig,
    options: EnvOptions,
    session: Option<Session>,
    agents: Vec<Option<Box<dyn Agent>>>,
    done: bool,
}

impl Env {
    pub fn new(spec: ScenarioSpec, options: EnvOptions) -> Result<Env> {
        let config = spec
            .config
            .with_overrides(options.overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        if options.opponents.len() + 1 != spec.players() {
            return Err(EngineError::Config(format!(
                "{} needs {} opponent agents, got {}",
                spec.name,
                spec.players() - 1,
                options.opponents.len()
            )));
        }
        for name in &options.opponents {
            make_agent(name, 0)?;
        }
        if options.frame_skip == 0 {
            return Err(EngineError::Config("frame_skip must be positive".into()));
        }
        Ok(Env { spec, config, options, session: None, agents: Vec::new(), done: false })
    }

    pub fn describe_spaces(&self) -> Spaces {
        Spaces {
            action_count: match self.options.layer {
                ActionLayer::Primitive => PrimitiveAction::COUNT,
                ActionLayer::Compound => CompoundAction::COUNT,
            },
            observation_shape: [self.spec.map.height() as usize, self.spec.map.width() as usize, CHANNELS],
        }
    }

    pub fn state(&self) -> Option<&GameState> {
        self.session.as_ref().map(Session::state)
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    /// Starts a fresh episode and returns player 0's observation.
    pub fn reset(&mut self, seed: u64) -> Result<Observation> {
        let session = Session::new(self.spec.clone(), self.config.clone(), seed, self.options.frame_skip)?;
        let mut seeds = SplitMix64::new(seed ^ 0x5eed_a6e7);
        self.agents = std::iter::once(Ok(None))
            .chain(self.options.opponents.iter().map(|n| make_agent(n, seeds.next_u64()).map(Some)))
            .collect::<Result<_>>()?;
        self.session = Some(session);
        self.done = false;
        Ok(self.observe())
    }

    pub fn observe(&self) -> Observation {
        let state = self.session.as_ref().expect("reset before observing").state();
        raw_tensor(state, 0, self.options.fog)
    }

    fn info(&self, action_ignored: bool) -> StepInfo {
        let state = self.session.as_ref().expect("active session").state();
        StepInfo {
            tick: state.tick_count(),
            action_ignored,
            players: state
                .players()
                .iter()
                .map(|p| PlayerInfo { score: p.score, resources: p.resources, alive: p.alive })
                .collect(),
            winner: state.terminal().and_then(|o| o.winner),
        }
    }

    /// Applies the agent's action and advances. A compound action runs
    /// decision point by decision point until its plan is exhausted, one of
    /// its steps is ignored, or the episode ends.
    pub fn step(&mut self, action: AnyAction) -> Result<StepResult> {
        if self.done {
            return Err(EngineError::EpisodeDone);
        }
        let session = self.session.as_mut().ok_or(EngineError::EpisodeDone)?;
        match (self.options.layer, action) {
            (ActionLayer::Primitive, AnyAction::Compound(_)) | (ActionLayer::Compound, AnyAction::Primitive(_)) => {
                return Err(EngineError::Config("action layer does not match the environment".into()))
            }
            _ => {}
        }
        let queued = session.submit(0, action)?;
        let mut ignored = queued == 0 && matches!(action, AnyAction::Compound(_));
        let mut reward = 0.0;
        loop {
            let prev = session.state().clone();
            session.consult(&mut self.agents)?;
            let outcomes = session.advance()?;
            ignored |= outcomes[0].ignored;
            reward += scenario_reward(&self.spec, &prev, session.state(), 0);
            let done = scenario_done(&self.spec, session.state());
            if done || ignored || session.needs_decision(0) {
                self.done = done;
                break;
            }
        }
        Ok(StepResult { observation: self.observe(), reward, done: self.done, info: self.info(ignored) })
    }
}
