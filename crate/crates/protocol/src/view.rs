//! Builders that turn engine values into wire messages.

use gridrts_core::observation::{CHANNEL_DOCS, CHANNEL_LAYOUT};
use gridrts_core::{load_scenario, scenario_names, CompoundAction, GameState, PrimitiveAction, TileMap};

use crate::message::*;
use crate::PROTOCOL_VERSION;

pub fn action_tables() -> ActionTables {
    ActionTables {
        primitive: PrimitiveAction::ALL
            .iter()
            .map(|a| ActionInfo { id: a.id() as u32, name: a.name().to_string() })
            .collect(),
        compound: CompoundAction::ALL
            .iter()
            .map(|a| ActionInfo { id: a.id() as u32, name: a.name().to_string() })
            .collect(),
    }
}

pub fn channel_table() -> Vec<ChannelInfo> {
    CHANNEL_LAYOUT
        .iter()
        .zip(CHANNEL_DOCS)
        .enumerate()
        .map(|(index, (name, doc))| ChannelInfo { index, name: name.to_string(), doc: doc.to_string() })
        .collect()
}

pub fn scenario_table() -> Vec<ScenarioInfo> {
    scenario_names()
        .into_iter()
        .map(|name| {
            let spec = load_scenario(name).expect("bundled scenarios load");
            ScenarioInfo {
                name: name.to_string(),
                width: spec.map.width(),
                height: spec.map.height(),
                players: spec.players(),
                objective: spec.objective.name().to_string(),
                episode_ticks: spec.episode_ticks,
            }
        })
        .collect()
}

/// The server's greeting.
pub fn hello() -> Hello {
    Hello {
        protocol_version: PROTOCOL_VERSION,
        scenarios: scenario_table(),
        actions: Some(action_tables()),
        channels: channel_table(),
        controllers: Controller::ALL.to_vec(),
    }
}

pub fn map_view(map: &TileMap) -> MapView {
    MapView {
        width: map.width(),
        height: map.height(),
        rows: map.to_text().lines().map(str::to_string).collect(),
    }
}

/// Full snapshot of a game; `map` and `blob_id` are left for the caller.
pub fn state_view(game_id: u64, state: &GameState) -> StateView {
    let rules = state.rules();
    let players = state
        .players()
        .iter()
        .enumerate()
        .map(|(index, p)| PlayerView {
            index,
            alive: p.alive,
            score: p.score,
            gold: p.resources.gold,
            lumber: p.resources.lumber,
            oil: p.resources.oil,
            food_used: p.resources.food_used,
            food_cap: p.resources.food_cap,
            unit_count: p.resources.unit_count,
            harvested: p.harvested,
            selected: p.selected.map(|id| id.0),
        })
        .collect();
    let entities = state
        .entities()
        .filter(|e| e.is_alive())
        .map(|e| {
            let kind = rules.get(e.archetype);
            EntityView {
                id: e.id.0,
                owner: e.owner,
                archetype: kind.name.clone(),
                x: e.pos.x,
                y: e.pos.y,
                hp: e.hp,
                max_hp: kind.max_hp,
                state: e.state.name().to_string(),
            }
        })
        .collect();
    let outcome = state.terminal();
    StateView {
        game_id,
        tick: state.tick_count(),
        done: outcome.is_some(),
        winner: outcome.and_then(|o| o.winner),
        players,
        entities,
        map_digest: format!("{:016x}", state.map().digest()),
        state_hash: format!("{:016x}", state.state_hash()),
        map: None,
        blob_id: None,
    }
}
