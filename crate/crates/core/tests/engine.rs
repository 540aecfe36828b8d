mod common;

use common::*;
use gridrts_core::{
    load_scenario, EngineError, EntityState, GameConfig, GameState, PrimitiveAction as A, Pos,
    TickStatus,
};

const OPEN: [&str; 5] = ["0....", ".....", ".....", ".....", "....1"];

#[test]
fn new_game_gives_each_player_one_idle_worker() {
    let spec = load_scenario("10x10-2-FFA").unwrap();
    let s = GameState::new_game(spec.config.clone(), &spec, 1).unwrap();
    assert_eq!(s.tick_count(), 0);
    assert_eq!(s.num_players(), 2);
    for p in 0..2 {
        let mine: Vec<_> = s.entities_of(p).collect();
        assert_eq!(mine.len(), 1);
        assert_eq!(mine[0].archetype, s.rules().worker());
        assert_eq!(mine[0].state, EntityState::Idle);
        assert_eq!(mine[0].pos, spec.spawns[p]);
    }
}

#[test]
fn instant_town_hall_adds_an_adjacent_hall() {
    let spec = load_scenario("15x15-2-FFA").unwrap();
    let config = GameConfig { instant_town_hall: true, ..spec.config.clone() };
    let s = GameState::new_game(config, &spec, 7).unwrap();
    let hall = s.rules().town_hall();
    for p in 0..2 {
        let halls: Vec<_> = s.entities_of(p).filter(|e| e.archetype == hall).collect();
        assert_eq!(halls.len(), 1);
        assert_eq!(halls[0].pos.chebyshev(spec.spawns[p]), 1);
    }
}

#[test]
fn new_game_is_deterministic() {
    let spec = load_scenario("21x21-2-FFA").unwrap();
    let a = GameState::new_game(spec.config.clone(), &spec, 42).unwrap();
    let b = GameState::new_game(spec.config.clone(), &spec, 42).unwrap();
    assert_eq!(a.state_hash(), b.state_hash());
    assert_eq!(a.map(), b.map());
}

#[test]
fn spawn_on_wall_is_rejected_naming_the_tile() {
    let mut spec = spec(&OPEN, 2, None);
    spec.map.tile_mut(Pos::new(2, 2)).terrain = gridrts_core::Terrain::Wall;
    spec.spawns[1] = Pos::new(2, 2);
    let err = GameState::new_game(open_config(), &spec, 1).unwrap_err();
    assert!(matches!(err, EngineError::Spawn { tile, .. } if tile == Pos::new(2, 2)));
    assert!(err.to_string().contains("(2, 2)"));

    let mut spec = common::spec(&OPEN, 2, None);
    spec.spawns[1] = spec.spawns[0];
    assert!(matches!(GameState::new_game(open_config(), &spec, 1), Err(EngineError::Spawn { .. })));
}

#[test]
fn walking_takes_exactly_ten_ticks_per_tile() {
    let mut s = game(&OPEN, 2, None, open_config());
    let w = worker_of(&s, 0);
    assert!(!s.apply_primitive_action(0, A::MoveRight).unwrap().ignored);
    let e = s.entity(w).unwrap();
    assert_eq!(e.state, EntityState::Walking);
    assert_eq!(e.timer.unwrap().total, 10);
    ticks(&mut s, 9);
    assert_eq!(pos_of(&s, w), Pos::new(0, 0));
    s.tick();
    assert_eq!(pos_of(&s, w), Pos::new(1, 0));
    assert_eq!(state_of(&s, w), EntityState::Idle);
}

#[test]
fn timer_exactness_over_a_long_walk() {
    let mut s = game(&["0.........", "..........", ".........1"], 2, None, open_config());
    let w = worker_of(&s, 0);
    assert!(s.order_move(w, Pos::new(9, 0)).unwrap());
    for t in 1..=90u64 {
        s.tick();
        assert_eq!(pos_of(&s, w).x as u64, t / 10, "tick {t}");
    }
}

#[test]
fn instant_walking_moves_on_the_next_tick() {
    for config in [
        GameConfig { instant_walking: true, ..open_config() },
        GameConfig { durative: false, ..open_config() },
    ] {
        let mut s = game(&OPEN, 2, None, config);
        let w = worker_of(&s, 0);
        s.apply_primitive_action(0, A::MoveDownRight).unwrap();
        s.tick();
        assert_eq!(pos_of(&s, w), Pos::new(1, 1));
    }
}

#[test]
fn idle_world_only_advances_the_tick() {
    let mut s = game(&OPEN, 2, Some("G = 100"), open_config());
    let before: Vec<_> = s.entities().cloned().collect();
    let players = s.players().to_vec();
    let map = s.map().clone();
    assert_eq!(s.tick(), TickStatus::Advanced);
    assert_eq!(s.tick_count(), 1);
    assert_eq!(s.entities().cloned().collect::<Vec<_>>(), before);
    assert_eq!(s.players(), &players[..]);
    assert_eq!(s.map(), &map);
}

#[test]
fn no_action_changes_nothing() {
    let mut s = game(&OPEN, 2, None, open_config());
    let h = s.state_hash();
    assert!(!s.apply_primitive_action(0, A::NoAction).unwrap().ignored);
    assert_eq!(s.state_hash(), h);
}

#[test]
fn unaffordable_town_hall_is_ignored() {
    let mut s = game(&OPEN, 2, None, open_config());
    s.player_mut(0).unwrap().resources.gold = 100;
    let h = s.state_hash();
    assert!(s.apply_primitive_action(0, A::Build0).unwrap().ignored);
    assert_eq!(s.state_hash(), h);
}

#[test]
fn illegal_moves_are_ignored_not_errors() {
    let mut s = game(&["0#...", "##...", "....1"], 2, None, open_config());
    for a in [A::MoveLeft, A::MoveUp, A::MoveRight, A::MoveDown, A::MoveDownRight, A::Attack, A::Harvest] {
        assert!(s.apply_primitive_action(0, a).unwrap().ignored, "{a:?}");
    }
    assert!(matches!(s.apply_primitive_action(2, A::NoAction), Err(EngineError::PlayerOutOfRange(2))));
}

#[test]
fn harvest_cycle_moves_yield_from_tile_to_player() {
    let mut s = game(&["0G...", ".....", "....1"], 2, Some("G = 100"), open_config());
    let w = worker_of(&s, 0);
    let gold0 = s.player(0).unwrap().resources.gold;
    assert!(!s.apply_primitive_action(0, A::Harvest).unwrap().ignored);
    assert_eq!(state_of(&s, w), EntityState::Harvesting);
    ticks(&mut s, 9);
    assert_eq!(s.player(0).unwrap().resources.gold, gold0);
    s.tick();
    let p = s.player(0).unwrap();
    assert_eq!(p.resources.gold, gold0 + 10);
    assert_eq!(p.score, 10);
    assert_eq!(s.map().tile(Pos::new(1, 0)).resource.unwrap().amount, 90);
    assert_eq!(state_of(&s, w), EntityState::Harvesting);
}

#[test]
fn harvest_clamps_to_remaining_amount() {
    let mut s = game(&["0G...", ".....", "....1"], 2, Some("G = 4"), open_config());
    let w = worker_of(&s, 0);
    let gold0 = s.player(0).unwrap().resources.gold;
    s.apply_primitive_action(0, A::Harvest).unwrap();
    ticks(&mut s, 10);
    assert_eq!(s.player(0).unwrap().resources.gold, gold0 + 4);
    assert!(s.map().tile(Pos::new(1, 0)).resource.is_none());
    assert_eq!(state_of(&s, w), EntityState::Idle);
}

#[test]
fn harvest_at_cap_still_depletes_tile() {
    let config = GameConfig { resource_cap: 1500, ..open_config() };
    let mut s = game(&["0G...", ".....", "....1"], 2, Some("G = 100"), config);
    assert_eq!(s.player(0).unwrap().resources.gold, 1500);
    s.apply_primitive_action(0, A::Harvest).unwrap();
    ticks(&mut s, 10);
    assert_eq!(s.player(0).unwrap().resources.gold, 1500);
    assert_eq!(s.map().tile(Pos::new(1, 0)).resource.unwrap().amount, 90);
}

#[test]
fn harvest_forever_walks_to_the_next_deposit() {
    let config = GameConfig { harvest_forever: true, ..open_config() };
    let mut s = game(&["0G....", "......", "....G.", ".....1"], 2, Some("G = 10"), config);
    let w = worker_of(&s, 0);
    s.apply_primitive_action(0, A::Harvest).unwrap();
    ticks(&mut s, 9);
    assert_eq!(s.evaluate_state_machine(w).unwrap(), EntityState::Harvesting);
    s.tick();
    assert!(s.map().tile(Pos::new(1, 0)).resource.is_none());
    let e = s.entity(w).unwrap();
    assert_eq!(e.state, EntityState::Walking);
    assert_eq!(e.path().last().unwrap().chebyshev(Pos::new(4, 2)), 1);

    let mut plain = game(&["0G....", "......", "....G.", ".....1"], 2, Some("G = 10"), open_config());
    plain.apply_primitive_action(0, A::Harvest).unwrap();
    ticks(&mut plain, 10);
    assert_eq!(state_of(&plain, worker_of(&plain, 0)), EntityState::Idle);
}

#[test]
fn footman_kills_worker_in_thirty_ticks() {
    let mut s = game(&["0....", ".....", "....1"], 2, None, open_config());
    let victim = worker_of(&s, 1);
    let f = spawn(&mut s, 0, "Footman", Pos::new(3, 1));
    select(&mut s, 0, f);
    let units1 = s.player(1).unwrap().resources.unit_count;
    assert!(!s.apply_primitive_action(0, A::Attack).unwrap().ignored);
    assert_eq!(state_of(&s, f), EntityState::Combat);
    ticks(&mut s, 10);
    assert_eq!(s.entity(victim).unwrap().hp, 20);
    ticks(&mut s, 19);
    assert_eq!(s.entity(victim).unwrap().hp, 10);
    assert!(s.terminal().is_none());
    s.tick();
    assert!(s.entity(victim).is_none());
    assert!(s.map().tile(Pos::new(4, 2)).occupant.is_none());
    assert_eq!(s.player(1).unwrap().resources.unit_count, units1 - 1);
    assert_eq!(s.player(0).unwrap().score, 30);
    assert_eq!(s.terminal().unwrap().winner, Some(0));
    assert_eq!(s.tick(), TickStatus::AlreadyTerminal);
}

#[test]
fn attack_with_target_out_of_range_deals_no_damage() {
    let mut s = game(&["0.....", "......", "....1."], 2, None, open_config());
    let victim = worker_of(&s, 1);
    let f = spawn(&mut s, 0, "Footman", Pos::new(3, 1));
    select(&mut s, 0, f);
    s.apply_primitive_action(0, A::Attack).unwrap();
    // The victim steps out of reach before the first blow lands.
    s.apply_primitive_action(1, A::MoveRight).unwrap();
    ticks(&mut s, 10);
    assert_eq!(s.entity(victim).unwrap().hp, 30);
    assert!(matches!(state_of(&s, f), EntityState::Walking | EntityState::Idle));
}

#[test]
fn retaliation_under_auto_attack() {
    let config = GameConfig { auto_attack: true, ..open_config() };
    let mut s = game(&["0....", ".....", "....1"], 2, None, config);
    let victim = worker_of(&s, 1);
    let f = spawn(&mut s, 0, "Footman", Pos::new(3, 1));
    select(&mut s, 0, f);
    s.apply_primitive_action(0, A::Attack).unwrap();
    ticks(&mut s, 10);
    let e = s.entity(victim).unwrap();
    assert_eq!(e.state, EntityState::Combat);
    assert_eq!(e.target, Some(gridrts_core::state::Target::Entity(f)));
    ticks(&mut s, 10);
    assert_eq!(s.entity(f).unwrap().hp, 58);
}

#[test]
fn no_retaliation_without_auto_attack() {
    let mut s = game(&["0....", ".....", "....1"], 2, None, open_config());
    let victim = worker_of(&s, 1);
    let f = spawn(&mut s, 0, "Footman", Pos::new(3, 1));
    select(&mut s, 0, f);
    s.apply_primitive_action(0, A::Attack).unwrap();
    ticks(&mut s, 10);
    assert_eq!(state_of(&s, victim), EntityState::Idle);
}

#[test]
fn building_a_town_hall_takes_three_hundred_ticks() {
    let mut s = game(&OPEN, 2, None, open_config());
    let w = worker_of(&s, 0);
    let gold0 = s.player(0).unwrap().resources.gold;
    assert!(!s.apply_primitive_action(0, A::Build0).unwrap().ignored);
    let hall_kind = s.rules().town_hall();
    let hall = s.entities_of(0).find(|e| e.archetype == hall_kind).unwrap().clone();
    assert_eq!(hall.state, EntityState::Spawning);
    assert_eq!(hall.timer.unwrap().total, 300);
    assert_eq!(state_of(&s, w), EntityState::Building);
    let p = s.player(0).unwrap();
    assert_eq!(p.resources.gold, gold0 - 500);
    assert_eq!(p.score, 50);
    assert_eq!(p.resources.food_cap, 1);
    // A busy builder ignores orders.
    assert!(s.apply_primitive_action(0, A::MoveRight).unwrap().ignored);
    ticks(&mut s, 299);
    assert_eq!(state_of(&s, hall.id), EntityState::Spawning);
    s.tick();
    assert_eq!(state_of(&s, hall.id), EntityState::Idle);
    assert_eq!(state_of(&s, w), EntityState::Idle);
    assert_eq!(s.player(0).unwrap().resources.food_cap, 5);
}

#[test]
fn instant_building_completes_next_tick() {
    let config = GameConfig { instant_building: true, ..open_config() };
    let mut s = game(&OPEN, 2, None, config);
    s.apply_primitive_action(0, A::Build0).unwrap();
    let hall_kind = s.rules().town_hall();
    let hall = s.entities_of(0).find(|e| e.archetype == hall_kind).unwrap().id;
    assert_eq!(s.evaluate_state_machine(hall).unwrap(), EntityState::Spawning);
    s.tick();
    assert_eq!(state_of(&s, hall), EntityState::Idle);
}

#[test]
fn training_takes_thirty_ticks_and_respects_unit_limit() {
    let mut s = game(&OPEN, 2, None, GameConfig { instant_town_hall: true, ..open_config() });
    let hall_kind = s.rules().town_hall();
    let hall = s.entities_of(0).find(|e| e.archetype == hall_kind).unwrap().id;
    select(&mut s, 0, hall);
    assert!(!s.apply_primitive_action(0, A::Build0).unwrap().ignored);
    let trainee = s.entities_of(0).filter(|e| e.state == EntityState::Spawning).map(|e| e.id).next().unwrap();
    ticks(&mut s, 29);
    assert_eq!(state_of(&s, trainee), EntityState::Spawning);
    s.tick();
    assert_eq!(state_of(&s, trainee), EntityState::Idle);

    let mut capped = game(&OPEN, 2, None, GameConfig { instant_town_hall: true, unit_limit: 1, ..open_config() });
    let hall = capped.entities_of(0).find(|e| e.archetype == hall_kind).unwrap().id;
    select(&mut capped, 0, hall);
    assert!(capped.apply_primitive_action(0, A::Build0).unwrap().ignored);
}

#[test]
fn spawning_becomes_idle_when_timer_fires() {
    let mut s = game(&OPEN, 2, None, open_config());
    let farm = s.rules().by_name("Farm").unwrap();
    let id = s.spawn_entity(0, farm, Pos::new(2, 2), EntityState::Spawning).unwrap();
    assert_eq!(s.evaluate_state_machine(id).unwrap(), EntityState::Spawning);
    ticks(&mut s, 300);
    assert_eq!(state_of(&s, id), EntityState::Idle);
    assert!(matches!(s.evaluate_state_machine(gridrts_core::EntityId(999)), Err(EngineError::UnknownEntity(999))));
}

#[test]
fn tick_limit_is_a_draw_and_terminal_absorbs() {
    let config = GameConfig { tick_limit: 50, ..open_config() };
    let mut s = game(&OPEN, 2, None, config);
    ticks(&mut s, 49);
    assert!(s.terminal().is_none());
    s.tick();
    assert_eq!(s.terminal().unwrap().winner, None);
    let h = s.state_hash();
    assert_eq!(s.tick(), TickStatus::AlreadyTerminal);
    assert_eq!(s.state_hash(), h);
    assert!(s.apply_primitive_action(0, A::MoveRight).unwrap().ignored);
}

#[test]
fn buildings_alone_do_not_keep_a_player_alive() {
    let mut s = game(&OPEN, 2, None, GameConfig { instant_town_hall: true, ..open_config() });
    s.forfeit(1).unwrap();
    assert_eq!(s.terminal().unwrap().winner, Some(0));

    let mut s = game(&OPEN, 2, None, GameConfig { instant_town_hall: true, ..open_config() });
    let victim = worker_of(&s, 1);
    let f = spawn(&mut s, 0, "Footman", Pos::new(3, 3));
    select(&mut s, 0, f);
    s.apply_primitive_action(0, A::Attack).unwrap();
    ticks(&mut s, 30);
    assert!(s.entity(victim).is_none());
    // Player 1 still owns its Town-Hall, but no units.
    assert!(s.entities_of(1).count() > 0);
    assert!(!s.player(1).unwrap().alive);
    assert_eq!(s.terminal().unwrap().winner, Some(0));
}

#[test]
fn forfeit_of_everyone_is_a_draw() {
    let mut s = game(&OPEN, 2, None, open_config());
    s.forfeit(0).unwrap();
    // Already decided: the second forfeit is absorbed.
    s.forfeit(1).unwrap();
    assert_eq!(s.terminal().unwrap().winner, Some(1));
    assert!(s.forfeit(5).is_err());
}

#[test]
fn selection_cycles_through_owned_entities() {
    let mut s = game(&OPEN, 2, None, open_config());
    let w = worker_of(&s, 0);
    // Single entity: cycling changes nothing and is reported as ignored.
    assert!(s.apply_primitive_action(0, A::NextUnit).unwrap().ignored);
    let f = spawn(&mut s, 0, "Footman", Pos::new(2, 2));
    assert!(!s.apply_primitive_action(0, A::NextUnit).unwrap().ignored);
    assert_eq!(s.player(0).unwrap().selected, Some(f));
    s.apply_primitive_action(0, A::NextUnit).unwrap();
    assert_eq!(s.player(0).unwrap().selected, Some(w));
    s.apply_primitive_action(0, A::PrevUnit).unwrap();
    assert_eq!(s.player(0).unwrap().selected, Some(f));
}

#[test]
fn lazy_repair_routes_around_a_blocker() {
    let mut s = game(&["0.........", "..........", ".........1"], 2, None, open_config());
    let w = worker_of(&s, 0);
    assert!(s.order_move(w, Pos::new(5, 0)).unwrap());
    spawn(&mut s, 1, "Farm", Pos::new(3, 0));
    ticks(&mut s, 50);
    assert_eq!(pos_of(&s, w), Pos::new(5, 0));
}

#[test]
fn greedy_stepping_without_pathfinding() {
    let config = GameConfig { pathfinding_enabled: false, ..open_config() };
    let mut s = game(&["0.........", "..........", ".........1"], 2, None, config);
    let w = worker_of(&s, 0);
    assert!(s.order_move(w, Pos::new(6, 2)).unwrap());
    assert_eq!(s.entity(w).unwrap().path_len(), 1);
    ticks(&mut s, 60);
    assert_eq!(pos_of(&s, w), Pos::new(6, 2));
}
