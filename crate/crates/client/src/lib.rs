//! Async client for the game server's `/ws` endpoint.
//!
//! Requests carry increasing `req_id`s; [`Client::request`] waits for the
//! matching reply and buffers anything else (broadcast states, binary tensor
//! frames) for [`Client::next_message`] and [`Client::take_blob`].

use std::collections::{HashMap, VecDeque};

use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message as WsMessage;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use gridrts_core::Observation;
use gridrts_protocol::{
    decode, decode_blob, encode, ActionMsg, Create, Created, Envelope, Hello, Layer, Message, Observe, Spectate,
    StateView, StepResult, PROTOCOL_VERSION,
};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("websocket: {0}")]
    Ws(#[from] tokio_tungstenite::tungstenite::Error),
    #[error("protocol: {0}")]
    Protocol(#[from] gridrts_protocol::ProtocolError),
    #[error("server error {code}: {message}")]
    Server { code: String, message: String },
    #[error("unexpected reply '{0}'")]
    Unexpected(&'static str),
    #[error("connection closed")]
    Closed,
}

pub type Result<T> = std::result::Result<T, ClientError>;

pub struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    next_req: u64,
    inbox: VecDeque<Envelope>,
    blobs: HashMap<u64, Observation>,
    hello: Hello,
}

fn server_error(message: Message) -> ClientError {
    match message {
        Message::Error(e) => ClientError::Server { code: e.code, message: e.message },
        other => ClientError::Unexpected(other.kind()),
    }
}

impl Client {
    /// Connects to `url` (e.g. `ws://127.0.0.1:8080/ws`) and exchanges hellos.
    pub async fn connect(url: &str) -> Result<Client> {
        let (ws, _) = connect_async(url).await?;
        let mut client = Client {
            ws,
            next_req: 1,
            inbox: VecDeque::new(),
            blobs: HashMap::new(),
            hello: Hello { protocol_version: PROTOCOL_VERSION, scenarios: vec![], actions: None, channels: vec![], controllers: vec![] },
        };
        let reply = client.request(Message::Hello(client.hello.clone())).await?;
        match reply.message {
            Message::Hello(h) => client.hello = h,
            other => return Err(server_error(other)),
        }
        Ok(client)
    }

    /// The server's greeting: scenarios, action tables, channel layout.
    pub fn hello(&self) -> &Hello {
        &self.hello
    }

    /// Sends a message with a fresh `req_id` and returns the id.
    pub async fn send(&mut self, message: Message) -> Result<u64> {
        let req_id = self.next_req;
        self.next_req += 1;
        self.send_raw(&encode(&Envelope::request(req_id, message))).await?;
        Ok(req_id)
    }

    /// Sends a text frame verbatim.
    pub async fn send_raw(&mut self, text: &str) -> Result<()> {
        self.ws.send(WsMessage::Text(text.to_string().into())).await?;
        Ok(())
    }

    async fn read_frame(&mut self) -> Result<Envelope> {
        loop {
            match self.ws.next().await {
                None => return Err(ClientError::Closed),
                Some(frame) => match frame? {
                    WsMessage::Text(text) => {
                        return decode(text.as_str()).map_err(|f| ClientError::Protocol(f.error));
                    }
                    WsMessage::Binary(bytes) => {
                        let (id, obs) = decode_blob(&bytes)?;
                        self.blobs.insert(id, obs);
                    }
                    WsMessage::Close(_) => return Err(ClientError::Closed),
                    _ => {}
                },
            }
        }
    }

    /// Waits for the reply carrying `req_id`, buffering other messages.
    pub async fn reply_to(&mut self, req_id: u64) -> Result<Envelope> {
        if let Some(i) = self.inbox.iter().position(|e| e.req_id == Some(req_id)) {
            return Ok(self.inbox.remove(i).unwrap());
        }
        loop {
            let env = self.read_frame().await?;
            if env.req_id == Some(req_id) {
                return Ok(env);
            }
            self.inbox.push_back(env);
        }
    }

    pub async fn request(&mut self, message: Message) -> Result<Envelope> {
        let req_id = self.send(message).await?;
        self.reply_to(req_id).await
    }

    /// Next message in arrival order, buffered ones first.
    pub async fn next_message(&mut self) -> Result<Envelope> {
        match self.inbox.pop_front() {
            Some(env) => Ok(env),
            None => self.read_frame().await,
        }
    }

    pub fn take_blob(&mut self, blob_id: u64) -> Option<Observation> {
        self.blobs.remove(&blob_id)
    }

    pub async fn create(&mut self, create: Create) -> Result<Created> {
        match self.request(Message::Create(create)).await?.message {
            Message::Created(c) => Ok(c),
            other => Err(server_error(other)),
        }
    }

    /// Current state; with `tensor`, also the observation blob it references.
    pub async fn observe(&mut self, observe: Observe) -> Result<(StateView, Option<Observation>)> {
        match self.request(Message::Observe(observe)).await?.message {
            Message::State(state) => {
                let obs = state.blob_id.and_then(|id| self.take_blob(id));
                Ok((state, obs))
            }
            other => Err(server_error(other)),
        }
    }

    /// Submits an action and waits for the step that consumes it.
    pub async fn act(
        &mut self,
        game_id: u64,
        player: usize,
        token: &str,
        layer: Layer,
        action_id: u32,
    ) -> Result<StepResult> {
        let msg = ActionMsg { game_id, player, layer, action_id, token: Some(token.to_string()) };
        match self.request(Message::Action(msg)).await?.message {
            Message::StepResult(r) => Ok(r),
            other => Err(server_error(other)),
        }
    }

    /// Subscribes to a game's state stream; returns the initial state.
    pub async fn spectate(&mut self, game_id: u64) -> Result<StateView> {
        match self.request(Message::Spectate(Spectate { game_id })).await?.message {
            Message::State(s) => Ok(s),
            other => Err(server_error(other)),
        }
    }

    /// Next broadcast state, skipping other unsolicited messages.
    pub async fn next_state(&mut self) -> Result<StateView> {
        loop {
            if let Message::State(s) = self.next_message().await?.message {
                return Ok(s);
            }
        }
    }

    pub async fn close(mut self) -> Result<()> {
        self.ws.close(None).await?;
        Ok(())
    }
}
