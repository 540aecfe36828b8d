use std::collections::BTreeSet;
use std::sync::Arc;

use axum::extract::ws::{Message as WsMessage, WebSocket};
use futures_util::{SinkExt, StreamExt};
use tokio::sync::mpsc;

use gridrts_protocol::{decode, encode, hello, Envelope, Message, PROTOCOL_VERSION};

use crate::game::{self, GameCmd, Request};
use crate::Registry;

/// A frame queued for one connection's writer.
#[derive(Debug, Clone)]
pub enum Outbound {
    Text(String),
    Binary(Vec<u8>),
}

pub type Outbox = mpsc::UnboundedSender<Outbound>;

pub(crate) fn send(out: &Outbox, envelope: &Envelope) {
    // A closed outbox means the peer left; the game carries on regardless.
    let _ = out.send(Outbound::Text(encode(envelope)));
}

pub(crate) async fn handle_socket(socket: WebSocket, registry: Arc<Registry>) {
    let conn = registry.next_conn_id();
    tracing::debug!(conn, "connection opened");
    let (mut sink, mut stream) = socket.split();
    let (out, mut outbox) = mpsc::unbounded_channel::<Outbound>();
    let writer = tokio::spawn(async move {
        while let Some(frame) = outbox.recv().await {
            let msg = match frame {
                Outbound::Text(s) => WsMessage::Text(s.into()),
                Outbound::Binary(b) => WsMessage::Binary(b.into()),
            };
            if sink.send(msg).await.is_err() {
                break;
            }
        }
    });

    let mut joined = BTreeSet::new();
    while let Some(Ok(frame)) = stream.next().await {
        match frame {
            WsMessage::Text(text) => handle_text(&registry, conn, &out, &mut joined, text.as_str()),
            WsMessage::Binary(_) => send(
                &out,
                &Envelope::new(Message::error("malformed", "binary frames are server-to-client only")),
            ),
            WsMessage::Close(_) => break,
            _ => {}
        }
    }

    for game_id in joined {
        if let Some(tx) = registry.sender(game_id) {
            let _ = tx.send(GameCmd::Disconnected { conn });
        }
    }
    drop(out);
    let _ = writer.await;
    tracing::debug!(conn, "connection closed");
}

fn handle_text(registry: &Arc<Registry>, conn: u64, out: &Outbox, joined: &mut BTreeSet<u64>, text: &str) {
    let envelope = match decode(text) {
        Ok(env) => env,
        Err(failure) => return send(out, &failure.reply()),
    };
    let req_id = envelope.req_id;
    let reply = |message| send(out, &Envelope::reply(req_id, message));
    let game_id = match &envelope.message {
        Message::Hello(h) => {
            return if h.protocol_version == PROTOCOL_VERSION {
                reply(Message::Hello(hello()))
            } else {
                reply(Message::error(
                    "version_mismatch",
                    format!("server speaks protocol {PROTOCOL_VERSION}, client sent {}", h.protocol_version),
                ))
            };
        }
        Message::Ping {} => return reply(Message::Pong {}),
        Message::Create(create) => {
            return match game::spawn_game(registry, create) {
                Ok(created) => reply(Message::Created(created)),
                Err(err) => reply(Message::Error(err)),
            };
        }
        Message::Observe(o) => o.game_id,
        Message::Action(a) => a.game_id,
        Message::Spectate(s) => s.game_id,
        other => {
            return reply(Message::error(
                "unexpected_type",
                format!("'{}' is a server-to-client message", other.kind()),
            ))
        }
    };
    let Some(tx) = registry.sender(game_id) else {
        return reply(Message::error("unknown_game", format!("no game with id {game_id}")));
    };
    let request = Request { conn, out: out.clone(), req_id, message: envelope.message };
    if tx.send(GameCmd::Request(request)).is_err() {
        return reply(Message::error("unknown_game", format!("game {game_id} is no longer running")));
    }
    joined.insert(game_id);
}
