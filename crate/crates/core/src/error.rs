use thiserror::Error;

use crate::map::Pos;

/// Errors raised by the simulator surface. Illegal in-game actions are never
/// errors; they resolve to no-ops flagged in the action outcome.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid map: {0}")]
    Map(String),
    #[error("spawn tile ({}, {}) is invalid: {reason}", .tile.x, .tile.y)]
    Spawn { tile: Pos, reason: String },
    #[error("player index {0} out of range")]
    PlayerOutOfRange(usize),
    #[error("unknown entity id {0}")]
    UnknownEntity(u32),
    #[error("tile ({}, {}) is outside the {width}x{height} map", .tile.x, .tile.y)]
    OutOfBounds { tile: Pos, width: i32, height: i32 },
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("unknown agent '{0}'")]
    UnknownAgent(String),
    #[error("episode is done; call reset before stepping again")]
    EpisodeDone,
    #[error("transcript: {0}")]
    Transcript(String),
    #[error("benchmark: {0}")]
    Bench(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for EngineError {
    fn from(err: std::io::Error) -> Self {
        EngineError::Io(err.to_string())
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
