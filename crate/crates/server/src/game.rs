//! One task per game. The task owns the session; everything else reaches it
//! through [`GameCmd`]s.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use tokio::sync::mpsc;
use tokio::time::{sleep_until, Instant};

use gridrts_core::rng::SplitMix64;
use gridrts_core::session::DEFAULT_FRAME_SKIP;
use gridrts_core::{load_scenario, make_agent, raw_tensor, Agent, EngineError, Session};
use gridrts_protocol::{
    encode_blob, map_view, state_view, ActionMsg, Create, Created, Envelope, ErrorMsg, Message,
    Mode, Observe, SeatToken, StateView, StepResult,
};

use crate::conn::{send, Outbound, Outbox};
use crate::{GameHandle, Registry};

pub struct Request {
    pub conn: u64,
    pub out: Outbox,
    pub req_id: Option<u64>,
    pub message: Message,
}

pub enum GameCmd {
    Request(Request),
    Disconnected { conn: u64 },
}

fn error(code: &str, message: impl Into<String>) -> ErrorMsg {
    ErrorMsg { code: code.to_string(), message: message.into() }
}

fn engine_error(err: EngineError) -> ErrorMsg {
    let code = match err {
        EngineError::UnknownScenario(_) => "unknown_scenario",
        EngineError::Config(_) => "invalid_config",
        _ => "engine",
    };
    error(code, err.to_string())
}

#[derive(Default)]
struct Seat {
    remote: bool,
    token: Option<String>,
    conn: Option<(u64, Outbox)>,
    disconnected_at: Option<u64>,
    forfeited: bool,
    /// Acted since the last decision point.
    decided: bool,
    /// Actions awaiting their step_result.
    pending: Vec<(Option<u64>, Outbox)>,
    ignored: bool,
}

struct Game {
    id: u64,
    session: Session,
    seats: Vec<Seat>,
    agents: Vec<Option<Box<dyn Agent>>>,
    mode: Mode,
    turn_timeout: Option<Duration>,
    turn_started: Instant,
    step_period: Duration,
    grace_ticks: u64,
    spectators: Vec<(u64, Outbox)>,
    next_blob: u64,
    transcript_dir: Option<PathBuf>,
    done: Arc<AtomicBool>,
}

/// Validates a create request, registers the game and starts its task.
pub(crate) fn spawn_game(registry: &Arc<Registry>, create: &Create) -> Result<Created, ErrorMsg> {
    let config = &registry.config;
    if registry.active_games() >= config.max_games {
        return Err(error("server_full", format!("server already hosts {} games", config.max_games)));
    }
    let spec = load_scenario(&create.scenario).map_err(engine_error)?;
    if create.players.len() != spec.players() {
        return Err(error(
            "invalid",
            format!("{} seats for the {}-player scenario {}", create.players.len(), spec.players(), spec.name),
        ));
    }
    let pairs = create.override_pairs();
    let game_config = spec
        .config
        .with_overrides(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        .map_err(engine_error)?;
    let frame_skip = create.frame_skip.unwrap_or(DEFAULT_FRAME_SKIP);
    let tps = game_config.ticks_per_second as u64;
    let session = Session::new(spec, game_config, create.seed, frame_skip).map_err(engine_error)?;

    let id = registry.next_game_id();
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
    let mut token_rng = SplitMix64::new(nanos ^ id.rotate_left(32));
    let mut seats = Vec::new();
    let mut agents = Vec::new();
    let mut tokens = Vec::new();
    for (player, seat) in create.players.iter().enumerate() {
        match seat.controller.agent_name() {
            Some(name) => {
                agents.push(Some(make_agent(name, create.seed.wrapping_add(player as u64)).map_err(engine_error)?));
                seats.push(Seat::default());
            }
            None => {
                let token = format!("g{id}-p{player}-{:016x}", token_rng.next_u64());
                tokens.push(SeatToken { player, token: token.clone() });
                agents.push(None);
                seats.push(Seat { remote: true, token: Some(token), ..Seat::default() });
            }
        }
    }

    let done = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::unbounded_channel();
    let game = Game {
        id,
        session,
        seats,
        agents,
        mode: create.mode,
        turn_timeout: create.turn_timeout_ms.map(Duration::from_millis),
        turn_started: Instant::now(),
        step_period: Duration::from_secs_f64(frame_skip as f64 / tps as f64),
        grace_ticks: (config.grace_seconds * tps as f64).round() as u64,
        spectators: Vec::new(),
        next_blob: 1,
        transcript_dir: config.transcript_dir.clone(),
        done: done.clone(),
    };
    let created = Created {
        game_id: id,
        scenario: create.scenario.clone(),
        mode: create.mode,
        frame_skip,
        seats: tokens,
    };
    tracing::info!(
        game_id = id,
        scenario = %create.scenario,
        seed = create.seed,
        mode = ?create.mode,
        remote_seats = created.seats.len(),
        "game created"
    );
    registry.games.lock().unwrap().insert(id, GameHandle { tx, done });

    let linger = config.linger;
    let task = tokio::spawn(run(game, rx, linger));
    let registry = registry.clone();
    tokio::spawn(async move {
        if let Err(e) = task.await {
            tracing::error!(game_id = id, error = %e, "game task crashed");
        }
        registry.games.lock().unwrap().remove(&id);
        tracing::info!(game_id = id, "game removed");
    });
    Ok(created)
}

async fn run(mut game: Game, mut rx: mpsc::UnboundedReceiver<GameCmd>, linger: Duration) {
    let mut next_step = Instant::now() + game.step_period;
    while !game.session.done() {
        let wake = game.wake_at(next_step);
        tokio::select! {
            cmd = rx.recv() => match cmd {
                Some(cmd) => game.handle(cmd),
                None => return,
            },
            _ = sleep_until(wake.unwrap_or(next_step)), if wake.is_some() => {
                game.step();
                next_step = Instant::now() + game.step_period;
            }
        }
        while !game.session.done() && game.lock_step_ready() {
            game.step();
            next_step = Instant::now() + game.step_period;
            tokio::task::yield_now().await;
        }
    }
    game.finish();
    let deadline = Instant::now() + linger;
    loop {
        tokio::select! {
            cmd = rx.recv() => match cmd {
                Some(cmd) => game.handle(cmd),
                None => return,
            },
            _ = sleep_until(deadline) => return,
        }
    }
}

impl Game {
    /// Remote seats a lock-step game waits for: live, not forfeited and not
    /// disconnected (unclaimed seats count).
    fn awaited(&self) -> impl Iterator<Item = usize> + '_ {
        let players = self.session.state().players();
        self.seats.iter().enumerate().filter_map(move |(p, s)| {
            (s.remote && !s.forfeited && s.disconnected_at.is_none() && players[p].alive).then_some(p)
        })
    }

    fn paced(&self) -> bool {
        self.mode == Mode::RealTime || self.awaited().next().is_none()
    }

    fn lock_step_ready(&self) -> bool {
        self.mode == Mode::LockStep
            && self.awaited().next().is_some()
            && self.awaited().all(|p| self.seats[p].decided || self.session.queued(p) > 0)
    }

    fn wake_at(&self, next_step: Instant) -> Option<Instant> {
        if self.paced() {
            Some(next_step)
        } else {
            self.turn_timeout.map(|t| self.turn_started + t)
        }
    }

    fn view(&self) -> StateView {
        state_view(self.id, self.session.state())
    }

    fn step(&mut self) {
        if let Err(e) = self.session.consult(&mut self.agents) {
            tracing::error!(game_id = self.id, error = %e, "agent consultation failed");
        }
        let outcomes = match self.session.advance() {
            Ok(o) => o,
            Err(e) => {
                tracing::error!(game_id = self.id, error = %e, "advance failed");
                return;
            }
        };
        let tick = self.session.state().tick_count();
        for p in 0..self.seats.len() {
            if !self.seats[p].remote {
                continue;
            }
            if self.seats[p].forfeited || self.session.done() {
                continue;
            }
            if let Some(since) = self.seats[p].disconnected_at {
                if tick.saturating_sub(since) >= self.grace_ticks {
                    self.forfeit(p);
                }
            }
        }
        let done = self.session.done();
        let outcome = self.session.outcome();
        for (p, seat) in self.seats.iter_mut().enumerate() {
            if !seat.remote {
                continue;
            }
            seat.decided = false;
            seat.ignored |= outcomes[p].ignored;
            if seat.pending.is_empty() || !(done || self.session.needs_decision(p)) {
                continue;
            }
            let result = StepResult {
                game_id: self.id,
                player: p,
                tick,
                ignored: seat.ignored,
                queued: self.session.queued(p),
                score: self.session.state().players()[p].score,
                done,
                winner: outcome.and_then(|o| o.winner),
            };
            for (req_id, out) in seat.pending.drain(..) {
                send(&out, &Envelope::reply(req_id, Message::StepResult(result.clone())));
            }
            seat.ignored = false;
        }
        self.broadcast();
        self.turn_started = Instant::now();
    }

    fn forfeit(&mut self, player: usize) {
        match self.session.forfeit(player) {
            Ok(()) => {
                self.seats[player].forfeited = true;
                tracing::info!(game_id = self.id, player, tick = self.session.state().tick_count(), "seat forfeited");
            }
            Err(e) => tracing::error!(game_id = self.id, player, error = %e, "forfeit failed"),
        }
    }

    fn broadcast(&mut self) {
        if self.spectators.is_empty() {
            return;
        }
        let text = gridrts_protocol::encode(&Envelope::new(Message::State(self.view())));
        self.spectators.retain(|(_, out)| out.send(Outbound::Text(text.clone())).is_ok());
    }

    fn finish(&mut self) {
        self.done.store(true, Ordering::Relaxed);
        let outcome = self.session.outcome();
        let transcript = self.session.finished_transcript();
        let state = self.session.state();
        tracing::info!(
            game_id = self.id,
            tick = state.tick_count(),
            winner = ?outcome.and_then(|o| o.winner),
            hash = format_args!("{:016x}", state.state_hash()),
            "game finished"
        );
        if let Some(dir) = &self.transcript_dir {
            let path = dir.join(format!("game-{}.jsonl", self.id));
            match transcript.save(&path) {
                Ok(()) => tracing::info!(game_id = self.id, path = %path.display(), "transcript saved"),
                Err(e) => tracing::error!(game_id = self.id, error = %e, "transcript not saved"),
            }
        }
    }

    fn handle(&mut self, cmd: GameCmd) {
        match cmd {
            GameCmd::Request(req) => {
                let Request { conn, out, req_id, message } = req;
                let result = match message {
                    Message::Action(a) => self.on_action(conn, &out, req_id, a),
                    Message::Observe(o) => self.on_observe(conn, &out, req_id, o),
                    Message::Spectate(_) => {
                        if !self.spectators.iter().any(|(c, _)| *c == conn) {
                            self.spectators.push((conn, out.clone()));
                        }
                        let mut view = self.view();
                        view.map = Some(map_view(self.session.state().map()));
                        send(&out, &Envelope::reply(req_id, Message::State(view)));
                        Ok(())
                    }
                    other => Err(error("unexpected_type", format!("'{}' is not a game request", other.kind()))),
                };
                if let Err(e) = result {
                    send(&out, &Envelope::reply(req_id, Message::Error(e)));
                }
            }
            GameCmd::Disconnected { conn } => {
                self.spectators.retain(|(c, _)| *c != conn);
                let tick = self.session.state().tick_count();
                let done = self.session.done();
                for (player, seat) in self.seats.iter_mut().enumerate() {
                    if seat.conn.as_ref().is_some_and(|(c, _)| *c == conn) {
                        seat.conn = None;
                        seat.pending.clear();
                        if !done && !seat.forfeited {
                            seat.disconnected_at = Some(tick);
                            tracing::info!(game_id = self.id, player, tick, "seat disconnected");
                        }
                    }
                }
            }
        }
    }

    /// Checks the seat credentials and binds the seat to this connection.
    fn claim(&mut self, conn: u64, out: &Outbox, player: usize, token: Option<&str>) -> Result<(), ErrorMsg> {
        let id = self.id;
        let seat = self
            .seats
            .get_mut(player)
            .filter(|s| s.remote)
            .ok_or_else(|| error("not_your_seat", format!("player {player} is not a remote seat")))?;
        let bound_here = seat.conn.as_ref().is_some_and(|(c, _)| *c == conn);
        if !bound_here && token != seat.token.as_deref() {
            return Err(error("bad_token", format!("wrong or missing token for player {player}")));
        }
        if !bound_here {
            seat.conn = Some((conn, out.clone()));
            if seat.disconnected_at.take().is_some() {
                tracing::info!(game_id = id, player, "seat rejoined");
            }
        }
        Ok(())
    }

    fn on_action(&mut self, conn: u64, out: &Outbox, req_id: Option<u64>, a: ActionMsg) -> Result<(), ErrorMsg> {
        if self.session.done() {
            return Err(error("game_over", format!("game {} is finished", self.id)));
        }
        let action = a.resolve()?;
        self.claim(conn, out, a.player, a.token.as_deref())?;
        if self.seats[a.player].forfeited {
            return Err(error("forfeited", format!("player {} has forfeited", a.player)));
        }
        self.session.submit(a.player, action).map_err(engine_error)?;
        let seat = &mut self.seats[a.player];
        seat.decided = true;
        seat.pending.push((req_id, out.clone()));
        Ok(())
    }

    fn on_observe(&mut self, conn: u64, out: &Outbox, req_id: Option<u64>, o: Observe) -> Result<(), ErrorMsg> {
        if let Some(token) = o.token.as_deref() {
            let player = o.player.ok_or_else(|| error("invalid", "a token needs a player"))?;
            self.claim(conn, out, player, Some(token))?;
        }
        let state = self.session.state();
        let mut view = self.view();
        if o.map {
            view.map = Some(map_view(state.map()));
        }
        if o.tensor {
            let player = o.player.unwrap_or(0);
            if player >= state.num_players() {
                return Err(error("invalid", format!("player {player} out of range")));
            }
            let blob_id = self.next_blob;
            self.next_blob += 1;
            let obs = raw_tensor(state, player, state.config().fog_of_war);
            let _ = out.send(Outbound::Binary(encode_blob(blob_id, &obs)));
            view.blob_id = Some(blob_id);
        }
        send(out, &Envelope::reply(req_id, Message::State(view)));
        Ok(())
    }
}
