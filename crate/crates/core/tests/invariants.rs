//! Randomised whole-game checks: bounds, conservation, occupancy, state
//! machine soundness, determinism and terminal absorption.

mod common;

use std::collections::HashMap;

use gridrts_core::agents::random_action;
use gridrts_core::rng::SplitMix64;
use gridrts_core::{load_scenario, EntityId, EntityState, GameConfig, GameState, Pos, PrimitiveAction};

fn total_deposits(s: &GameState) -> i64 {
    s.map().tiles().iter().filter_map(|t| t.resource).map(|r| r.amount as i64).sum()
}

/// Checks every per-tick invariant and returns the entity states seen.
fn check(s: &GameState, initial_deposits: i64, prev: &HashMap<EntityId, EntityState>) -> HashMap<EntityId, EntityState> {
    let cap = s.config().resource_cap;
    let rules = s.rules();
    for (p, player) in s.players().iter().enumerate() {
        let r = player.resources;
        for v in [r.gold, r.lumber, r.oil] {
            assert!((0..=cap).contains(&v), "resource {v} out of [0, {cap}]");
        }
        assert!(r.food_used <= r.food_cap, "food {} > cap {}", r.food_used, r.food_cap);
        let units = s.entities_of(p).filter(|e| rules.get(e.archetype).is_unit()).count() as i32;
        assert_eq!(r.unit_count, units);
        assert!(r.unit_count <= s.config().unit_limit);
        assert_eq!(player.alive, units > 0);
    }
    // Every unit of gold or lumber harvested left a tile.
    let harvested: i64 = s.players().iter().map(|p| p.harvested).sum();
    assert_eq!(harvested + total_deposits(s), initial_deposits);

    let mut seen = HashMap::new();
    for e in s.entities() {
        assert!(e.is_alive());
        let max = rules.get(e.archetype).max_hp;
        assert!(e.hp > 0 && e.hp <= max);
        assert!(s.map().in_bounds(e.pos));
        let tile = s.map().tile(e.pos);
        assert!(tile.is_open_ground());
        assert_eq!(tile.occupant, Some(e.id));
        if let Some(&before) = prev.get(&e.id) {
            assert!(before.can_transition_to(e.state), "{:?}: {before:?} -> {:?}", e.id, e.state);
        }
        seen.insert(e.id, e.state);
    }
    let occupied = s.map().tiles().iter().filter(|t| t.occupant.is_some()).count();
    assert_eq!(occupied, s.entities().count());
    for p in s.players() {
        if let Some(sel) = p.selected {
            assert!(s.entity(sel).is_some(), "dangling selection");
        }
    }
    seen
}

fn fuzz(scenario: &str, config: GameConfig, seed: u64, max_ticks: u64) -> u64 {
    let spec = load_scenario(scenario).unwrap();
    let mut s = GameState::new_game(config, &spec, seed).unwrap();
    let mut rng = SplitMix64::new(seed ^ 0xf00d);
    let deposits = total_deposits(&s);
    let mut prev = check(&s, deposits, &HashMap::new());
    let mut ticks = 0;
    let mut last_deposit = vec![0; s.map().area()];
    while ticks < max_ticks && s.terminal().is_none() {
        if ticks % 5 == 0 {
            for p in 0..s.num_players() {
                let a = random_action(&s, p, &mut rng);
                s.apply_primitive_action(p, a).unwrap();
            }
        }
        s.tick();
        ticks += 1;
        prev = check(&s, deposits, &prev);
        for (i, t) in s.map().tiles().iter().enumerate() {
            let now = t.resource.map_or(0, |r| r.amount);
            if ticks > 1 {
                assert!(now <= last_deposit[i], "deposit grew");
            }
            last_deposit[i] = now;
        }
    }
    ticks
}

#[test]
fn random_play_keeps_every_invariant() {
    let configs = [
        GameConfig { tick_limit: 20_000, ..GameConfig::default() },
        GameConfig { tick_limit: 20_000, durative: false, harvest_forever: true, ..GameConfig::default() },
        GameConfig {
            tick_limit: 20_000,
            instant_town_hall: true,
            instant_building: true,
            pathfinding_enabled: false,
            fog_of_war: true,
            resource_cap: 2000,
            unit_limit: 4,
            food_limit: 6,
            ..GameConfig::default()
        },
        GameConfig { tick_limit: 20_000, instant_walking: true, auto_attack: false, pathfinder: gridrts_core::PathAlgorithm::Bfs, ..GameConfig::default() },
    ];
    let mut total = 0;
    for (k, config) in configs.into_iter().enumerate() {
        for (j, scenario) in ["10x10-2-FFA", "15x15-2-FFA", "31x31-4-FFA"].iter().enumerate() {
            total += fuzz(scenario, config.clone(), 11 + (k * 3 + j) as u64, 20_000);
        }
    }
    assert!(total >= 100_000, "only {total} ticks fuzzed");
}

#[test]
fn solo_random_play_keeps_invariants() {
    let spec = load_scenario("solo-resources").unwrap();
    let mut total = 0;
    for seed in 0..4 {
        let config = GameConfig { instant_town_hall: seed % 2 == 0, ..spec.config.clone() };
        total += fuzz("solo-resources", config, seed, 100_000);
    }
    assert!(total >= 4 * 600);
}

fn hash_trace(scenario: &str, seed: u64, action_seed: u64, n: u64) -> Vec<u64> {
    let spec = load_scenario(scenario).unwrap();
    let mut s = GameState::new_game(spec.config.clone(), &spec, seed).unwrap();
    let mut rng = SplitMix64::new(action_seed);
    let mut out = vec![s.state_hash()];
    for t in 0..n {
        if t % 10 == 0 {
            for p in 0..s.num_players() {
                let a = random_action(&s, p, &mut rng);
                s.apply_primitive_action(p, a).unwrap();
            }
        }
        s.tick();
        out.push(s.state_hash());
    }
    out
}

#[test]
fn same_seed_and_actions_give_identical_hash_sequences() {
    for scenario in ["10x10-2-FFA", "31x31-6-FFA"] {
        assert_eq!(hash_trace(scenario, 5, 9, 2000), hash_trace(scenario, 5, 9, 2000));
    }
}

#[test]
fn differing_seeds_diverge() {
    let a = hash_trace("15x15-2-FFA", 1, 9, 200);
    let b = hash_trace("15x15-2-FFA", 2, 9, 200);
    assert!(a.iter().zip(&b).any(|(x, y)| x != y));
}

#[test]
fn hash_is_pure_and_sensitive() {
    let spec = load_scenario("10x10-2-FFA").unwrap();
    let mut s = GameState::new_game(spec.config.clone(), &spec, 3).unwrap();
    assert_eq!(s.state_hash(), s.state_hash());
    let h = s.state_hash();
    s.player_mut(0).unwrap().resources.gold -= 1;
    assert_ne!(s.state_hash(), h);
}

#[test]
fn terminal_state_absorbs_ticks_and_actions() {
    let spec = load_scenario("10x10-2-FFA").unwrap();
    let mut s = GameState::new_game(spec.config.clone(), &spec, 3).unwrap();
    s.forfeit(1).unwrap();
    let h = s.state_hash();
    for a in PrimitiveAction::ALL {
        s.apply_primitive_action(0, a).unwrap();
        s.tick();
    }
    assert_eq!(s.state_hash(), h);
    assert_eq!(s.tick_count(), 0);
    assert!(s.map().in_bounds(Pos::new(0, 0)));
}

fn arb_config() -> impl proptest::strategy::Strategy<Value = GameConfig> {
    use proptest::prelude::*;
    (any::<[bool; 8]>(), 1i32..=20, 500i32..=1_000_000).prop_map(|(f, units, cap)| GameConfig {
        instant_town_hall: f[0],
        instant_building: f[1],
        instant_walking: f[2],
        harvest_forever: f[3],
        auto_attack: f[4],
        durative: f[5],
        pathfinding_enabled: f[6],
        fog_of_war: f[7],
        unit_limit: units,
        resource_cap: cap,
        tick_limit: 3000,
        ..GameConfig::default()
    })
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

    #[test]
    fn invariants_hold_for_arbitrary_configs(
        config in arb_config(),
        scenario in proptest::sample::select(gridrts_core::scenario_names().to_vec()),
        seed in proptest::prelude::any::<u64>(),
    ) {
        fuzz(scenario, config, seed, 1500);
    }

    #[test]
    fn replaying_the_same_inputs_reproduces_every_hash(
        scenario in proptest::sample::select(gridrts_core::scenario_names().to_vec()),
        seed in proptest::prelude::any::<u64>(),
        action_seed in proptest::prelude::any::<u64>(),
    ) {
        proptest::prop_assert_eq!(hash_trace(scenario, seed, action_seed, 300), hash_trace(scenario, seed, action_seed, 300));
    }
}
