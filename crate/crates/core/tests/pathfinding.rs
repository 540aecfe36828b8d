use std::collections::VecDeque;

use gridrts_core::pathfinding::{find_path_bfs, find_path_jps, search_bfs, search_jps, BoolGrid, GridView, PathQuery};
use gridrts_core::rng::SplitMix64;
use gridrts_core::Pos;

/// Independent flood fill: 8-connected step distances from `from`.
fn distances(g: &BoolGrid, from: Pos) -> Vec<Option<u32>> {
    let idx = |p: Pos| (p.y * g.width + p.x) as usize;
    let mut dist = vec![None; g.open.len()];
    dist[idx(from)] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(p) = queue.pop_front() {
        let d = dist[idx(p)].unwrap();
        for dy in -1..=1 {
            for dx in -1..=1 {
                let n = Pos::new(p.x + dx, p.y + dy);
                if (dx, dy) != (0, 0) && g.walkable(n) && dist[idx(n)].is_none() {
                    dist[idx(n)] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
    }
    dist
}

fn random_grid(rng: &mut SplitMix64, w: i32, h: i32, wall_pct: u64) -> BoolGrid {
    let open = (0..w * h).map(|_| rng.below(100) >= wall_pct).collect();
    BoolGrid { width: w, height: h, open }
}

fn check_path(g: &BoolGrid, from: Pos, to: Pos, path: &[Pos]) {
    let mut prev = from;
    let mut seen = std::collections::HashSet::from([from]);
    for &p in path {
        assert_eq!(prev.chebyshev(p), 1, "gap {prev:?} -> {p:?}");
        assert!(g.walkable(p));
        assert!(seen.insert(p), "cycle at {p:?}");
        prev = p;
    }
    assert_eq!(prev, to);
}

#[test]
fn five_by_five_diagonal_has_length_four() {
    let g = BoolGrid::open(5, 5);
    let q = PathQuery::new(&g, Pos::new(0, 0), Pos::new(4, 4));
    assert_eq!(find_path_jps(q).unwrap().unwrap().len(), 4);
    assert_eq!(find_path_bfs(q).unwrap().unwrap().len(), 4);
}

#[test]
fn straight_corridor_has_length_six() {
    let mut g = BoolGrid { width: 3, height: 7, open: vec![false; 21] };
    for y in 0..7 {
        g.set(Pos::new(0, y), true);
    }
    let q = PathQuery::new(&g, Pos::new(0, 0), Pos::new(0, 6));
    assert_eq!(find_path_jps(q).unwrap().unwrap().len(), 6);
    assert_eq!(find_path_bfs(q).unwrap().unwrap().len(), 6);
}

#[test]
fn jps_and_bfs_match_the_flood_fill_on_random_maps() {
    let mut rng = SplitMix64::new(2024);
    let mut reachable_pairs = 0;
    for _ in 0..1000 {
        let w = 8 + rng.below(9) as i32;
        let h = 8 + rng.below(9) as i32;
        let g = random_grid(&mut rng, w, h, 25);
        for _ in 0..8 {
            let from = Pos::new(rng.below(w as u64) as i32, rng.below(h as u64) as i32);
            let to = Pos::new(rng.below(w as u64) as i32, rng.below(h as u64) as i32);
            if !g.walkable(from) {
                continue;
            }
            let expected = distances(&g, from)[(to.y * w + to.x) as usize];
            let q = PathQuery::new(&g, from, to);
            let jps = find_path_jps(q).unwrap();
            let bfs = find_path_bfs(q).unwrap();
            assert_eq!(jps.as_ref().map(|p| p.len() as u32), expected, "jps {from:?}->{to:?} on {g:?}");
            assert_eq!(bfs.as_ref().map(|p| p.len() as u32), expected, "bfs {from:?}->{to:?}");
            if let Some(p) = jps {
                reachable_pairs += 1;
                check_path(&g, from, to, &p);
            }
            if let Some(p) = bfs {
                check_path(&g, from, to, &p);
            }
        }
    }
    assert!(reachable_pairs > 3000);
}

#[test]
fn exhaustive_pairs_on_eight_by_eight_maps() {
    let mut rng = SplitMix64::new(7);
    for _ in 0..20 {
        let g = random_grid(&mut rng, 8, 8, 30);
        let tiles: Vec<Pos> = (0..64).map(|i| Pos::new(i % 8, i / 8)).collect();
        for &from in tiles.iter().filter(|&&p| g.walkable(p)) {
            let dist = distances(&g, from);
            for &to in &tiles {
                let q = PathQuery::new(&g, from, to);
                let jps = find_path_jps(q).unwrap();
                assert_eq!(jps.as_ref().map(|p| p.len() as u32), dist[(to.y * 8 + to.x) as usize]);
                if let Some(p) = jps {
                    check_path(&g, from, to, &p);
                }
            }
        }
    }
}

#[test]
fn jps_expands_no_more_than_bfs_on_open_maps() {
    let mut rng = SplitMix64::new(99);
    for size in [8, 16, 31] {
        let g = random_grid(&mut rng, size, size, 3);
        let from = Pos::new(0, 0);
        let to = Pos::new(size - 1, size - 1);
        if !g.walkable(from) || !g.walkable(to) {
            continue;
        }
        let q = PathQuery::new(&g, from, to);
        let (jps, bfs) = (search_jps(q).unwrap(), search_bfs(q).unwrap());
        assert!(jps.expansions <= bfs.expansions, "size {size}: {} > {}", jps.expansions, bfs.expansions);
    }
}

#[test]
fn out_of_bounds_and_unreachable() {
    let mut g = BoolGrid::open(5, 5);
    assert!(find_path_jps(PathQuery::new(&g, Pos::new(0, 0), Pos::new(5, 0))).is_err());
    assert!(find_path_bfs(PathQuery::new(&g, Pos::new(-1, 0), Pos::new(2, 0))).is_err());
    for p in Pos::new(4, 4).neighbors() {
        if g.in_bounds(p) {
            g.set(p, false);
        }
    }
    assert_eq!(find_path_jps(PathQuery::new(&g, Pos::new(0, 0), Pos::new(4, 4))).unwrap(), None);
    assert_eq!(find_path_jps(PathQuery::new(&g, Pos::new(2, 2), Pos::new(2, 2))).unwrap(), Some(vec![]));
}
