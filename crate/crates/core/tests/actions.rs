mod common;

use common::*;
use gridrts_core::actions::{AnyAction, CompoundAction as C, PrimitiveAction as A};
use gridrts_core::agents::random_action;
use gridrts_core::rng::SplitMix64;
use gridrts_core::{expand_compound, legal_actions, load_scenario, EntityState, GameConfig, GameState, Pos, Session};

#[test]
fn encodings_are_dense_and_round_trip() {
    for (i, a) in A::ALL.iter().enumerate() {
        assert_eq!(a.id() as usize, i);
        assert_eq!(A::from_id(i as u32), Some(*a));
        let json = serde_json::to_string(&AnyAction::Primitive(*a)).unwrap();
        assert_eq!(serde_json::from_str::<AnyAction>(&json).unwrap(), AnyAction::Primitive(*a));
    }
    for (i, c) in C::ALL.iter().enumerate() {
        assert_eq!(c.id() as usize, i);
        assert_eq!(C::from_id(i as u32), Some(*c));
    }
    assert_eq!(A::from_id(16), None);
    assert_eq!(C::from_id(6), None);
    assert_eq!(A::COUNT, 16);
    assert_eq!(C::COUNT, 6);
}

#[test]
fn boxed_in_worker_has_no_moves() {
    let s = game(&["0#...", "##...", "....1"], 2, None, open_config());
    let legal = legal_actions(&s, 0);
    assert!(legal.contains(&A::NoAction));
    assert!(legal.iter().all(|a| a.direction().is_none()));
}

#[test]
fn worker_next_to_gold_may_harvest() {
    let s = game(&["0G...", ".....", "....1"], 2, None, open_config());
    assert!(legal_actions(&s, 0).contains(&A::Harvest));
    let far = game(&["0....", "....G", "....1"], 2, None, open_config());
    assert!(!legal_actions(&far, 0).contains(&A::Harvest));
}

#[test]
fn dead_player_may_only_wait() {
    let mut s = game(&["0....", ".....", "....1"], 2, None, open_config());
    s.forfeit(1).unwrap();
    assert_eq!(legal_actions(&s, 1), vec![A::NoAction]);
    assert_eq!(legal_actions(&s, 7), vec![A::NoAction]);
}

/// Single-step simulation oracle: an action is legal exactly when applying
/// it to a copy is not ignored.
#[test]
fn legal_actions_match_single_step_simulation() {
    let spec = load_scenario("15x15-2-FFA").unwrap();
    let mut rng = SplitMix64::new(3);
    for seed in 0..6 {
        let config = GameConfig { instant_town_hall: seed % 2 == 0, tick_limit: 100_000, ..spec.config.clone() };
        let mut s = GameState::new_game(config, &spec, seed).unwrap();
        for t in 0..3000 {
            if t % 7 == 0 {
                for p in 0..2 {
                    let legal = legal_actions(&s, p);
                    assert!(legal.contains(&A::NoAction));
                    for a in A::ALL {
                        let mut copy = s.clone();
                        let ignored = copy.apply_primitive_action(p, a).unwrap().ignored;
                        assert_eq!(!ignored, legal.contains(&a), "{a:?} at tick {t}");
                    }
                    let a = random_action(&s, p, &mut rng);
                    s.apply_primitive_action(p, a).unwrap();
                }
            }
            s.tick();
            if s.terminal().is_some() {
                break;
            }
        }
    }
}

#[test]
fn harvest_nearest_walks_three_tiles_then_harvests() {
    let s = game(&["0...G.", "......", ".....1"], 2, None, open_config());
    let seq = expand_compound(&s, 0, C::HarvestNearestResource);
    assert_eq!(seq, vec![A::MoveRight, A::MoveRight, A::MoveRight, A::Harvest]);
}

#[test]
fn attack_nearest_needs_a_visible_enemy() {
    let config = GameConfig { fog_of_war: true, ..open_config() };
    let far = game(&["0.........................1"], 2, None, config.clone());
    assert!(expand_compound(&far, 0, C::AttackNearestEnemy).is_empty());
    let near = game(&["0....1"], 2, None, config);
    let seq = expand_compound(&near, 0, C::AttackNearestEnemy);
    assert_eq!(seq.last(), Some(&A::Attack));
    assert_eq!(seq.len(), 4 + 1);
}

#[test]
fn build_town_hall_is_idempotent() {
    let s = game(&["0....", ".....", "....1"], 2, None, open_config());
    assert_eq!(expand_compound(&s, 0, C::BuildTownHall), vec![A::Build0]);
    let owned = game(&["0....", ".....", "....1"], 2, None, GameConfig { instant_town_hall: true, ..open_config() });
    assert!(expand_compound(&owned, 0, C::BuildTownHall).is_empty());
}

#[test]
fn train_or_build_army_falls_back_to_barracks() {
    let mut s = game(&["0....", ".....", "....1"], 2, None, open_config());
    assert_eq!(expand_compound(&s, 0, C::TrainOrBuildArmy), vec![A::Build1]);
    let barracks = spawn(&mut s, 0, "Barracks", Pos::new(2, 0));
    spawn(&mut s, 0, "Farm", Pos::new(3, 0));
    let seq = expand_compound(&s, 0, C::TrainOrBuildArmy);
    assert_eq!(seq.last(), Some(&A::Build0));
    let mut run = s.clone();
    for a in seq {
        assert!(!run.apply_primitive_action(0, a).unwrap().ignored);
    }
    assert_eq!(run.player(0).unwrap().selected, Some(barracks));
}

#[test]
fn expand_toward_opponent_moves_then_builds_a_farm() {
    let s = game(&["0.........", "..........", ".........1"], 2, None, open_config());
    let seq = expand_compound(&s, 0, C::ExpandTowardOpponent);
    assert_eq!(seq.last(), Some(&A::Build2));
    assert!(seq[..seq.len() - 1].iter().all(|a| a.direction().is_some()));
}

#[test]
fn nothing_to_expand_for_a_dead_player() {
    let mut s = game(&["0....", ".....", "....1"], 2, None, open_config());
    s.forfeit(1).unwrap();
    for c in C::ALL {
        assert!(expand_compound(&s, 1, c).is_empty());
    }
}

/// Runs each compound expansion through a session with a silent opponent and
/// checks that no step is ignored on its first attempt.
#[test]
fn expansions_execute_without_ignored_steps() {
    let mut executed = 0;
    for scenario in ["10x10-2-FFA", "15x15-2-FFA", "21x21-2-FFA"] {
        let spec = load_scenario(scenario).unwrap();
        for seed in 0..5u64 {
            let config = GameConfig { tick_limit: 100_000, auto_attack: false, ..spec.config.clone() };
            let mut base = Session::new(spec.clone(), config, seed, 10).unwrap();
            let mut rng = SplitMix64::new(seed);
            // Reach a varied mid-game position: a town hall, some farms, an army.
            let script = [C::BuildTownHall, C::HarvestNearestResource, C::BuildBarracks, C::TrainOrBuildArmy];
            for round in 0..(40 + rng.below(40)) {
                if base.needs_decision(0) {
                    base.submit(0, AnyAction::Compound(script[round as usize % script.len()])).unwrap();
                }
                base.advance().unwrap();
            }
            // Let in-flight orders settle so nothing moves into a planned path.
            while base.state().entities_of(0).any(|e| e.state == EntityState::Walking) {
                base.clear_queue(0);
                base.advance().unwrap();
            }
            for c in C::ALL {
                let mut s = Session::new(spec.clone(), base.state().config().clone(), seed, 10).unwrap();
                s = replace_state(s, &base);
                let n = s.submit(0, AnyAction::Compound(c)).unwrap();
                for step in 0..n {
                    let out = s.advance().unwrap();
                    assert!(!out[0].ignored, "{scenario} seed {seed} {c:?} step {step}");
                }
                executed += n;
            }
        }
    }
    assert!(executed > 100, "{executed}");
}

/// Continues from `base` by replaying its transcript into `fresh`.
fn replace_state(mut fresh: Session, base: &Session) -> Session {
    let t = base.transcript();
    let mut actions = t.actions.iter().peekable();
    while fresh.state().tick_count() < base.state().tick_count() {
        let tick = fresh.state().tick_count();
        while let Some(r) = actions.next_if(|r| r.tick == tick) {
            fresh.submit(r.player, AnyAction::Primitive(r.action)).unwrap();
        }
        fresh.advance().unwrap();
    }
    assert_eq!(fresh.state().state_hash(), base.state().state_hash());
    fresh
}
