//! Versioned JSON messages exchanged over the game server's duplex socket.
//!
//! Every frame is one JSON object with a `"type"` tag and an optional
//! client-chosen `"req_id"` that the server echoes on its reply. Unknown
//! fields are ignored on decode. Tensor observations travel separately as
//! binary frames (see [`encode_blob`]) referenced from a `state` message by
//! `blob_id`.

mod message;
mod view;

pub use message::*;
pub use view::{action_tables, channel_table, hello, map_view, scenario_table, state_view};

/// Bumped on any incompatible change to the message schema.
pub const PROTOCOL_VERSION: u32 = 1;

/// Every value the `"type"` field may take.
pub const MESSAGE_TYPES: [&str; 11] = [
    "hello",
    "create",
    "created",
    "observe",
    "state",
    "action",
    "step_result",
    "spectate",
    "error",
    "ping",
    "pong",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("message has no \"type\" field")]
    MissingType,
    #[error("unknown message type '{0}'")]
    UnknownType(String),
    #[error("invalid '{kind}' message: {reason}")]
    Invalid { kind: String, reason: String },
    #[error("binary frame: {0}")]
    Blob(String),
}

impl ProtocolError {
    /// Machine-readable code carried by the `error` reply.
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::Malformed(_) => "malformed",
            ProtocolError::MissingType => "missing_type",
            ProtocolError::UnknownType(_) => "unknown_type",
            ProtocolError::Invalid { .. } => "invalid",
            ProtocolError::Blob(_) => "malformed",
        }
    }
}

/// A decode failure together with whatever `req_id` could be salvaged, so the
/// error reply can still be correlated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeFailure {
    pub req_id: Option<u64>,
    pub error: ProtocolError,
}

impl DecodeFailure {
    pub fn reply(&self) -> Envelope {
        Envelope::reply(self.req_id, Message::error(self.error.code(), self.error.to_string()))
    }
}

pub fn encode(envelope: &Envelope) -> String {
    serde_json::to_string(envelope).expect("messages always serialize")
}

pub fn decode(text: &str) -> Result<Envelope, DecodeFailure> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| DecodeFailure { req_id: None, error: ProtocolError::Malformed(e.to_string()) })?;
    let Some(object) = value.as_object() else {
        return Err(DecodeFailure {
            req_id: None,
            error: ProtocolError::Malformed("expected a JSON object".into()),
        });
    };
    let req_id = object.get("req_id").and_then(serde_json::Value::as_u64);
    let fail = |error| DecodeFailure { req_id, error };
    let kind = match object.get("type") {
        None => return Err(fail(ProtocolError::MissingType)),
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(other) => return Err(fail(ProtocolError::UnknownType(other.to_string()))),
    };
    if !MESSAGE_TYPES.contains(&kind.as_str()) {
        return Err(fail(ProtocolError::UnknownType(kind)));
    }
    serde_json::from_value(value).map_err(|e| fail(ProtocolError::Invalid { kind, reason: e.to_string() }))
}

/// Binary frame layout: little-endian u64 `blob_id`, then the flat tensor
/// bytes of [`gridrts_core::Observation::to_le_bytes`].
pub fn encode_blob(blob_id: u64, observation: &gridrts_core::Observation) -> Vec<u8> {
    let mut out = blob_id.to_le_bytes().to_vec();
    out.extend(observation.to_le_bytes());
    out
}

pub fn decode_blob(bytes: &[u8]) -> Result<(u64, gridrts_core::Observation), ProtocolError> {
    if bytes.len() < 8 {
        return Err(ProtocolError::Blob("shorter than the blob id".into()));
    }
    let id = u64::from_le_bytes(bytes[..8].try_into().unwrap());
    let obs = gridrts_core::Observation::from_le_bytes(&bytes[8..])
        .map_err(|e| ProtocolError::Blob(e.to_string()))?;
    Ok((id, obs))
}
