#![allow(dead_code)]

use gridrts_core::{EntityId, EntityState, GameConfig, GameState, Objective, Pos, ScenarioSpec};

/// Fixture scenario from map rows; solo maps get the score objective.
pub fn spec(rows: &[&str], players: usize, amounts: Option<&str>) -> ScenarioSpec {
    let text = rows.join("\n");
    let (objective, episode) = if players == 1 { (Objective::Score, Some(100_000)) } else { (Objective::LastManStanding, None) };
    ScenarioSpec::from_text("fixture", &text, amounts, players, objective, episode).unwrap()
}

pub fn game(rows: &[&str], players: usize, amounts: Option<&str>, config: GameConfig) -> GameState {
    GameState::new_game(config, &spec(rows, players, amounts), 1).unwrap()
}

pub fn open_config() -> GameConfig {
    GameConfig { tick_limit: 1_000_000, auto_attack: false, ..GameConfig::default() }
}

pub fn worker_of(state: &GameState, player: usize) -> EntityId {
    let w = state.rules().worker();
    state.entities_of(player).find(|e| e.archetype == w).unwrap().id
}

pub fn pos_of(state: &GameState, id: EntityId) -> Pos {
    state.live_entity(id).unwrap().pos
}

pub fn state_of(state: &GameState, id: EntityId) -> EntityState {
    state.entity(id).map(|e| e.state).unwrap_or(EntityState::Dead)
}

pub fn spawn(state: &mut GameState, owner: usize, name: &str, at: Pos) -> EntityId {
    let a = state.rules().by_name(name).unwrap();
    state.spawn_entity(owner, a, at, EntityState::Idle).unwrap()
}

pub fn select(state: &mut GameState, player: usize, id: EntityId) {
    state.player_mut(player).unwrap().selected = Some(id);
}

pub fn ticks(state: &mut GameState, n: u64) {
    for _ in 0..n {
        state.tick();
    }
}
