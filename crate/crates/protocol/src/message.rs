use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use gridrts_core::{AnyAction, CompoundAction, PrimitiveAction};

/// One socket frame: the optional correlation id plus the tagged body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub req_id: Option<u64>,
    #[serde(flatten)]
    pub message: Message,
}

impl Envelope {
    pub fn new(message: Message) -> Self {
        Envelope { req_id: None, message }
    }

    pub fn request(req_id: u64, message: Message) -> Self {
        Envelope { req_id: Some(req_id), message }
    }

    pub fn reply(req_id: Option<u64>, message: Message) -> Self {
        Envelope { req_id, message }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello(Hello),
    Create(Create),
    Created(Created),
    Observe(Observe),
    State(StateView),
    Action(ActionMsg),
    StepResult(StepResult),
    Spectate(Spectate),
    Error(ErrorMsg),
    Ping {},
    Pong {},
}

impl Message {
    pub fn error(code: &str, message: impl Into<String>) -> Message {
        Message::Error(ErrorMsg { code: code.to_string(), message: message.into() })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello(_) => "hello",
            Message::Create(_) => "create",
            Message::Created(_) => "created",
            Message::Observe(_) => "observe",
            Message::State(_) => "state",
            Message::Action(_) => "action",
            Message::StepResult(_) => "step_result",
            Message::Spectate(_) => "spectate",
            Message::Error(_) => "error",
            Message::Ping {} => "ping",
            Message::Pong {} => "pong",
        }
    }
}

/// Sent by the client with only `protocol_version`; the server answers with
/// the full tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub protocol_version: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<ScenarioInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<ActionTables>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<ChannelInfo>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controllers: Vec<Controller>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioInfo {
    pub name: String,
    pub width: i32,
    pub height: i32,
    pub players: usize,
    pub objective: String,
    pub episode_ticks: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionTables {
    pub primitive: Vec<ActionInfo>,
    pub compound: Vec<ActionInfo>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionInfo {
    pub id: u32,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub index: usize,
    pub name: String,
    pub doc: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Controller {
    Remote,
    Random,
    RuleBased,
}

impl Controller {
    pub const ALL: [Controller; 3] = [Controller::Remote, Controller::Random, Controller::RuleBased];

    /// In-process agent name, `None` for a remote seat.
    pub fn agent_name(self) -> Option<&'static str> {
        match self {
            Controller::Remote => None,
            Controller::Random => Some("random"),
            Controller::RuleBased => Some("rule_based"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Advance only once every connected remote seat has acted.
    #[default]
    LockStep,
    /// Advance on a wall clock; missing actions default to NoAction.
    RealTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seat {
    pub controller: Controller,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Create {
    pub scenario: String,
    /// GameConfig field overrides; values may be JSON booleans, numbers or
    /// strings.
    #[serde(default)]
    pub config: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub seed: u64,
    pub players: Vec<Seat>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_skip: Option<u32>,
    /// Lock-step only: advance with NoAction for absent seats after this
    /// many milliseconds. Absent means wait indefinitely.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_timeout_ms: Option<u64>,
}

impl Create {
    /// Overrides as `key=value` strings for `GameConfig::with_overrides`.
    pub fn override_pairs(&self) -> Vec<(String, String)> {
        self.config
            .iter()
            .map(|(k, v)| {
                let raw = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.clone(), raw)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatToken {
    pub player: usize,
    pub token: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Created {
    pub game_id: u64,
    pub scenario: String,
    pub mode: Mode,
    pub frame_skip: u32,
    /// One token per remote seat; present it on `action` or `observe` to
    /// claim (or reclaim) the seat.
    pub seats: Vec<SeatToken>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observe {
    pub game_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    /// Also send the tensor observation as a binary frame.
    #[serde(default)]
    pub tensor: bool,
    /// Include the tile grid in the state reply.
    #[serde(default)]
    pub map: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Spectate {
    pub game_id: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerView {
    pub index: usize,
    pub alive: bool,
    pub score: i64,
    pub gold: i32,
    pub lumber: i32,
    pub oil: i32,
    pub food_used: i32,
    pub food_cap: i32,
    pub unit_count: i32,
    pub harvested: i64,
    pub selected: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityView {
    pub id: u32,
    pub owner: usize,
    pub archetype: String,
    pub x: i32,
    pub y: i32,
    pub hp: i32,
    pub max_hp: i32,
    pub state: String,
}

/// Tile grid as text rows: `.` grass, `~` water, `#` wall, `G`/`L`/`O`
/// gold, lumber and oil deposits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapView {
    pub width: i32,
    pub height: i32,
    pub rows: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateView {
    pub game_id: u64,
    pub tick: u64,
    pub done: bool,
    pub winner: Option<usize>,
    pub players: Vec<PlayerView>,
    pub entities: Vec<EntityView>,
    /// Hex digest of terrain and resource amounts; clients refetch the map
    /// (`observe` with `map: true`) when it changes.
    pub map_digest: String,
    pub state_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blob_id: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Primitive,
    Compound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMsg {
    pub game_id: u64,
    pub player: usize,
    pub layer: Layer,
    pub action_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

impl ActionMsg {
    /// Maps the id through the layer's action table; out-of-table ids yield
    /// an `unknown_action` error message.
    pub fn resolve(&self) -> Result<AnyAction, ErrorMsg> {
        let action = match self.layer {
            Layer::Primitive => PrimitiveAction::from_id(self.action_id).map(AnyAction::Primitive),
            Layer::Compound => CompoundAction::from_id(self.action_id).map(AnyAction::Compound),
        };
        action.ok_or_else(|| ErrorMsg {
            code: "unknown_action".into(),
            message: format!(
                "unknown action {} in the {} layer",
                self.action_id,
                match self.layer {
                    Layer::Primitive => "primitive",
                    Layer::Compound => "compound",
                }
            ),
        })
    }
}

/// Reply to an `action`, sent once the decision point it joined has been
/// simulated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepResult {
    pub game_id: u64,
    pub player: usize,
    /// Tick after the step.
    pub tick: u64,
    /// The primitive applied for this player resolved to a no-op.
    pub ignored: bool,
    /// Primitives still queued from a compound action.
    pub queued: usize,
    pub score: i64,
    pub done: bool,
    pub winner: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorMsg {
    pub code: String,
    pub message: String,
}
