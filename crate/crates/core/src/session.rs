//! Decision-point driver shared by headless matches, the environment and the
//! service, plus the transcript format used to verify replays.

use std::collections::VecDeque;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actions::{expand_compound, AnyAction, PrimitiveAction};
use crate::agents::Agent;
use crate::config::GameConfig;
use crate::engine::ActionOutcome;
use crate::error::{EngineError, Result};
use crate::scenarios::{load_scenario, ScenarioSpec};
use crate::state::{GameState, Outcome, TickStatus};

pub const TRANSCRIPT_VERSION: u32 = 1;

/// Ticks between state-hash checkpoints in a transcript.
pub const CHECKPOINT_INTERVAL: u64 = 100;

pub const DEFAULT_FRAME_SKIP: u32 = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub version: u32,
    pub scenario: String,
    pub seed: u64,
    pub frame_skip: u32,
    pub config: GameConfig,
}

/// One line of a transcript file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Header(TranscriptHeader),
    Action { tick: u64, player: usize, action: u8 },
    Forfeit { tick: u64, player: usize },
    Hash { tick: u64, hash: String },
    Final { tick: u64, hash: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionRecord {
    pub tick: u64,
    pub player: usize,
    pub action: PrimitiveAction,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub actions: Vec<ActionRecord>,
    /// (decision tick, player) of every forfeit, applied before that tick's
    /// actions.
    pub forfeits: Vec<(u64, usize)>,
    /// (tick, state hash) every [`CHECKPOINT_INTERVAL`] ticks.
    pub checkpoints: Vec<(u64, u64)>,
    pub final_hash: Option<(u64, u64)>,
}

fn hex(hash: u64) -> String {
    format!("{hash:016x}")
}

fn unhex(s: &str) -> Result<u64> {
    u64::from_str_radix(s, 16).map_err(|_| EngineError::Transcript(format!("bad hash '{s}'")))
}

impl Transcript {
    pub fn new(header: TranscriptHeader) -> Self {
        Transcript { header, actions: Vec::new(), forfeits: Vec::new(), checkpoints: Vec::new(), final_hash: None }
    }

    /// Records in file order: header, then actions and checkpoints
    /// interleaved by tick, then the final hash.
    pub fn records(&self) -> Vec<Record> {
        let mut events: Vec<(u64, u8, Record)> = self
            .forfeits
            .iter()
            .map(|&(tick, player)| (tick, 0, Record::Forfeit { tick, player }))
            .chain(self.actions.iter().map(|a| {
                (a.tick, 1, Record::Action { tick: a.tick, player: a.player, action: a.action.id() })
            }))
            .collect();
        // Stable: actions keep their player order within a tick.
        events.sort_by_key(|e| (e.0, e.1));
        let mut out = vec![Record::Header(self.header.clone())];
        let mut checkpoints = self.checkpoints.iter().peekable();
        for (tick, _, record) in events {
            while let Some(&&(t, hash)) = checkpoints.peek() {
                if t > tick {
                    break;
                }
                out.push(Record::Hash { tick: t, hash: hex(hash) });
                checkpoints.next();
            }
            out.push(record);
        }
        out.extend(checkpoints.map(|&(tick, hash)| Record::Hash { tick, hash: hex(hash) }));
        if let Some((tick, hash)) = self.final_hash {
            out.push(Record::Final { tick, hash: hex(hash) });
        }
        out
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        for r in self.records() {
            let line = serde_json::to_string(&r).map_err(|e| EngineError::Transcript(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write(std::io::BufWriter::new(file))
    }

    pub fn read<R: BufRead>(input: R) -> Result<Transcript> {
        let mut transcript: Option<Transcript> = None;
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(&line)
                .map_err(|e| EngineError::Transcript(format!("line {}: {e}", n + 1)))?;
            match (record, transcript.as_mut()) {
                (Record::Header(h), None) => {
                    if h.version != TRANSCRIPT_VERSION {
                        return Err(EngineError::Transcript(format!("unsupported version {}", h.version)));
                    }
                    transcript = Some(Transcript::new(h));
                }
                (Record::Header(_), Some(_)) => {
                    return Err(EngineError::Transcript(format!("line {}: second header", n + 1)))
                }
                (_, None) => return Err(EngineError::Transcript("missing header".into())),
                (Record::Action { tick, player, action }, Some(t)) => {
                    let action = PrimitiveAction::from_id(action as u32).ok_or_else(|| {
                        EngineError::Transcript(format!("line {}: unknown action {action}", n + 1))
                    })?;
                    t.actions.push(ActionRecord { tick, player, action });
                }
                (Record::Forfeit { tick, player }, Some(t)) => t.forfeits.push((tick, player)),
                (Record::Hash { tick, hash }, Some(t)) => t.checkpoints.push((tick, unhex(&hash)?)),
                (Record::Final { tick, hash }, Some(t)) => t.final_hash = Some((tick, unhex(&hash)?)),
            }
        }
        transcript.ok_or_else(|| EngineError::Transcript("empty transcript".into()))
    }

    pub fn parse(text: &str) -> Result<Transcript> {
        Self::read(text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Transcript> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }
}

/// A game advanced in decision points: each player contributes at most one
/// primitive action, then the engine runs `frame_skip` ticks.
#[derive(Clone, Debug)]
pub struct Session {
    spec: ScenarioSpec,
    state: GameState,
    frame_skip: u32,
    queues: Vec<VecDeque<PrimitiveAction>>,
    transcript: Transcript,
}

impl Session {
    pub fn new(spec: ScenarioSpec, config: GameConfig, seed: u64, frame_skip: u32) -> Result<Session> {
        if frame_skip == 0 {
            return Err(EngineError::Config("frame_skip must be positive".into()));
        }
        let state = GameState::new_game(config.clone(), &spec, seed)?;
        let header = TranscriptHeader {
            version: TRANSCRIPT_VERSION,
            scenario: spec.name.clone(),
            seed,
            frame_skip,
            config,
        };
        let queues = vec![VecDeque::new(); spec.players()];
        Ok(Session { spec, state, frame_skip, queues, transcript: Transcript::new(header) })
    }

    /// Records the transcript under a different scenario reference, e.g. the
    /// path of a custom scenario file.
    pub fn set_scenario_ref(&mut self, reference: &str) {
        self.transcript.header.scenario = reference.to_string();
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn frame_skip(&self) -> u32 {
        self.frame_skip
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn done(&self) -> bool {
        self.state.terminal().is_some()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.state.terminal()
    }

    /// Whether the player has no queued primitives left.
    pub fn needs_decision(&self, player: usize) -> bool {
        self.queues.get(player).is_some_and(VecDeque::is_empty)
    }

    pub fn queued(&self, player: usize) -> usize {
        self.queues.get(player).map_or(0, VecDeque::len)
    }

    /// Replaces the player's queue with `action` (a compound action is
    /// expanded now). Returns the number of queued primitives.
    pub fn submit(&mut self, player: usize, action: AnyAction) -> Result<usize> {
        if player >= self.queues.len() {
            return Err(EngineError::PlayerOutOfRange(player));
        }
        let queue = &mut self.queues[player];
        queue.clear();
        match action {
            AnyAction::Primitive(a) => queue.push_back(a),
            AnyAction::Compound(c) => queue.extend(expand_compound(&self.state, player, c)),
        }
        Ok(queue.len())
    }

    /// Removes every entity of `player` at the current decision point and
    /// records it so replays reproduce the forfeit.
    pub fn forfeit(&mut self, player: usize) -> Result<()> {
        if self.done() {
            return Err(EngineError::EpisodeDone);
        }
        self.state.forfeit(player)?;
        self.transcript.forfeits.push((self.state.tick_count(), player));
        self.clear_queue(player);
        if self.done() {
            self.seal();
        }
        Ok(())
    }

    pub fn clear_queue(&mut self, player: usize) {
        if let Some(q) = self.queues.get_mut(player) {
            q.clear();
        }
    }

    /// Consults every agent whose queue is empty.
    pub fn consult(&mut self, agents: &mut [Option<Box<dyn Agent>>]) -> Result<()> {
        for (player, agent) in agents.iter_mut().enumerate() {
            if let Some(agent) = agent {
                if self.needs_decision(player) {
                    let action = agent.act(&self.state, player);
                    self.submit(player, action)?;
                }
            }
        }
        Ok(())
    }

    /// Applies one queued primitive per player (NoAction when empty) in
    /// player order, then runs `frame_skip` ticks or until the game ends.
    pub fn advance(&mut self) -> Result<Vec<ActionOutcome>> {
        if self.done() {
            return Err(EngineError::EpisodeDone);
        }
        let tick = self.state.tick_count();
        let mut outcomes = Vec::with_capacity(self.queues.len());
        for player in 0..self.queues.len() {
            let action = self.queues[player].pop_front().unwrap_or(PrimitiveAction::NoAction);
            let outcome = self.state.apply_primitive_action(player, action)?;
            if outcome.ignored {
                // The rest of an open-loop plan is stale once a step fails.
                self.queues[player].clear();
            }
            if action != PrimitiveAction::NoAction {
                self.transcript.actions.push(ActionRecord { tick, player, action });
            }
            outcomes.push(outcome);
        }
        for _ in 0..self.frame_skip {
            if self.state.tick() == TickStatus::AlreadyTerminal {
                break;
            }
            let t = self.state.tick_count();
            if t % CHECKPOINT_INTERVAL == 0 {
                self.transcript.checkpoints.push((t, self.state.state_hash()));
            }
            if self.done() {
                break;
            }
        }
        if self.done() {
            self.seal();
        }
        Ok(outcomes)
    }

    fn seal(&mut self) {
        self.transcript.final_hash = Some((self.state.tick_count(), self.state.state_hash()));
    }

    /// Stamps the final hash and hands back the transcript.
    pub fn finish(mut self) -> (GameState, Transcript) {
        self.seal();
        (self.state, self.transcript)
    }

    pub fn finished_transcript(&self) -> Transcript {
        let mut t = self.transcript.clone();
        t.final_hash = Some((self.state.tick_count(), self.state.state_hash()));
        t
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchResult {
    pub winner: Option<usize>,
    pub ticks: u64,
    pub scores: Vec<i64>,
    pub final_hash: u64,
}

/// Plays a full game between in-process agents.
pub fn play_match(
    spec: &ScenarioSpec,
    config: GameConfig,
    seed: u64,
    agents: Vec<Box<dyn Agent>>,
    frame_skip: u32,
) -> Result<(MatchResult, Transcript)> {
    if agents.len() != spec.players() {
        return Err(EngineError::Config(format!(
            "{} agents for a {}-player scenario",
            agents.len(),
            spec.players()
        )));
    }
    let mut session = Session::new(spec.clone(), config, seed, frame_skip)?;
    let mut agents: Vec<Option<Box<dyn Agent>>> = agents.into_iter().map(Some).collect();
    while !session.done() {
        session.consult(&mut agents)?;
        session.advance()?;
    }
    let (state, transcript) = session.finish();
    let result = MatchResult {
        winner: state.terminal().and_then(|o| o.winner),
        ticks: state.tick_count(),
        scores: state.players().iter().map(|p| p.score).collect(),
        final_hash: state.state_hash(),
    };
    Ok((result, transcript))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    pub ticks: u64,
    pub checkpoints: usize,
    pub final_hash: u64,
}

/// Re-simulates a transcript and checks every checkpoint and the final hash.
pub fn replay(transcript: &Transcript) -> Result<ReplayReport> {
    let spec = load_scenario(&transcript.header.scenario)?;
    replay_with(&spec, transcript)
}

pub fn replay_with(spec: &ScenarioSpec, transcript: &Transcript) -> Result<ReplayReport> {
    let h = &transcript.header;
    let mut state = GameState::new_game(h.config.clone(), spec, h.seed)?;
    let end = transcript.final_hash.map(|(t, _)| t);
    let expected: std::collections::BTreeMap<u64, u64> = transcript.checkpoints.iter().copied().collect();
    let mismatch = |tick: u64| EngineError::Transcript(format!("hash mismatch at tick {tick}"));
    let mut actions = transcript.actions.iter().peekable();
    let mut forfeits = transcript.forfeits.iter().peekable();
    let mut verified = 0;
    loop {
        if state.terminal().is_some() {
            break;
        }
        let tick = state.tick_count();
        while let Some(&(_, player)) = forfeits.next_if(|f| f.0 == tick) {
            state.forfeit(player)?;
        }
        if state.terminal().is_some() || end.is_some_and(|e| tick >= e) {
            break;
        }
        while let Some(a) = actions.next_if(|a| a.tick == tick) {
            state.apply_primitive_action(a.player, a.action)?;
        }
        if let Some(a) = actions.peek() {
            if a.tick < tick {
                return Err(EngineError::Transcript(format!(
                    "action at tick {} is not on a decision point",
                    a.tick
                )));
            }
        }
        for _ in 0..h.frame_skip {
            if state.tick() == TickStatus::AlreadyTerminal {
                break;
            }
            let t = state.tick_count();
            if let Some(&want) = expected.get(&t) {
                if want != state.state_hash() {
                    return Err(mismatch(t));
                }
                verified += 1;
            }
            if state.terminal().is_some() {
                break;
            }
        }
    }
    if let Some(a) = actions.next() {
        return Err(EngineError::Transcript(format!("action at tick {} was never reached", a.tick)));
    }
    if let Some((tick, _)) = forfeits.next() {
        return Err(EngineError::Transcript(format!("forfeit at tick {tick} was never reached")));
    }
    if verified != expected.len() {
        let missing = expected.keys().find(|&&t| t > state.tick_count()).copied().unwrap_or(0);
        return Err(mismatch(missing));
    }
    let final_hash = state.state_hash();
    if let Some((tick, want)) = transcript.final_hash {
        if tick != state.tick_count() || want != final_hash {
            return Err(mismatch(tick));
        }
    }
    Ok(ReplayReport { ticks: state.tick_count(), checkpoints: verified, final_hash })
}
