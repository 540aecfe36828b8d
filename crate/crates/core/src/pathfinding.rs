//! Grid path-finding on 8-connected maps with uniform step cost.
//!
//! Diagonal and cardinal steps both cost 1, so path length is the number of
//! steps and the Chebyshev distance is an exact lower bound. Diagonal steps
//! may pass between two blocked orthogonal tiles.
//!
//! [`find_path_jps`] is jump point search on top of A*. [`find_path_bfs`] is a
//! plain breadth-first search; it is the reference the JPS results are tested
//! against and the engine's alternative router.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::Result;
use crate::map::{Pos, TileMap, NEIGHBOR_OFFSETS};

/// Walkability predicate over a rectangular grid.
pub trait GridView {
    fn width(&self) -> i32;
    fn height(&self) -> i32;
    fn walkable(&self, p: Pos) -> bool;

    fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width() && p.y < self.height()
    }
}

/// Terrain-only view: open ground counts as walkable, occupancy ignored.
impl GridView for TileMap {
    fn width(&self) -> i32 {
        TileMap::width(self)
    }
    fn height(&self) -> i32 {
        TileMap::height(self)
    }
    fn walkable(&self, p: Pos) -> bool {
        self.get(p).is_some_and(|t| t.is_open_ground())
    }
}

/// Simple boolean grid, handy for tests and benchmarks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolGrid {
    pub width: i32,
    pub height: i32,
    pub open: Vec<bool>,
}

impl BoolGrid {
    pub fn open(width: i32, height: i32) -> Self {
        BoolGrid { width, height, open: vec![true; (width * height) as usize] }
    }

    pub fn set(&mut self, p: Pos, open: bool) {
        let i = (p.y * self.width + p.x) as usize;
        self.open[i] = open;
    }
}

impl GridView for BoolGrid {
    fn width(&self) -> i32 {
        self.width
    }
    fn height(&self) -> i32 {
        self.height
    }
    fn walkable(&self, p: Pos) -> bool {
        self.in_bounds(p) && self.open[(p.y * self.width + p.x) as usize]
    }
}

pub struct PathQuery<'a, G: GridView + ?Sized> {
    pub grid: &'a G,
    pub from: Pos,
    pub to: Pos,
    pub diagonal: bool,
}

impl<G: GridView + ?Sized> Clone for PathQuery<'_, G> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<G: GridView + ?Sized> Copy for PathQuery<'_, G> {}

impl<'a, G: GridView + ?Sized> PathQuery<'a, G> {
    pub fn new(grid: &'a G, from: Pos, to: Pos) -> Self {
        PathQuery { grid, from, to, diagonal: true }
    }

    fn check(&self) -> Result<()> {
        for p in [self.from, self.to] {
            if !self.grid.in_bounds(p) {
                return Err(crate::EngineError::OutOfBounds {
                    tile: p,
                    width: self.grid.width(),
                    height: self.grid.height(),
                });
            }
        }
        Ok(())
    }
}

/// A search result with the number of node expansions it took.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub path: Option<Vec<Pos>>,
    pub expansions: usize,
}

/// Shortest path `from -> to` excluding `from`, one entry per step.
pub fn find_path_jps<G: GridView + ?Sized>(q: PathQuery<'_, G>) -> Result<Option<Vec<Pos>>> {
    Ok(search_jps(q)?.path)
}

pub fn find_path_bfs<G: GridView + ?Sized>(q: PathQuery<'_, G>) -> Result<Option<Vec<Pos>>> {
    Ok(search_bfs(q)?.path)
}

pub fn search_bfs<G: GridView + ?Sized>(q: PathQuery<'_, G>) -> Result<SearchOutcome> {
    q.check()?;
    if q.from == q.to {
        return Ok(SearchOutcome { path: Some(Vec::new()), expansions: 0 });
    }
    if !q.grid.walkable(q.to) {
        return Ok(SearchOutcome { path: None, expansions: 0 });
    }
    let w = q.grid.width();
    let idx = |p: Pos| (p.y * w + p.x) as usize;
    let offsets = if q.diagonal { &NEIGHBOR_OFFSETS[..] } else { &NEIGHBOR_OFFSETS[..4] };
    let mut parent = vec![u32::MAX; (w * q.grid.height()) as usize];
    parent[idx(q.from)] = idx(q.from) as u32;
    let mut queue = VecDeque::from([q.from]);
    let mut expansions = 0;
    while let Some(cur) = queue.pop_front() {
        expansions += 1;
        for &(dx, dy) in offsets {
            let next = cur.offset(dx, dy);
            if !q.grid.walkable(next) || parent[idx(next)] != u32::MAX {
                continue;
            }
            parent[idx(next)] = idx(cur) as u32;
            if next == q.to {
                let mut path = vec![next];
                let mut at = idx(cur);
                while at != idx(q.from) {
                    path.push(Pos::new(at as i32 % w, at as i32 / w));
                    at = parent[at] as usize;
                }
                path.reverse();
                return Ok(SearchOutcome { path: Some(path), expansions });
            }
            queue.push_back(next);
        }
    }
    Ok(SearchOutcome { path: None, expansions })
}

#[derive(Clone, Copy)]
struct Node {
    pos: Pos,
    g: u32,
    parent: u32,
    dir: u8,
}

const NO_DIR: u8 = 8;
const ROOT: u32 = u32::MAX;

fn dir_index(dx: i32, dy: i32) -> u8 {
    NEIGHBOR_OFFSETS
        .iter()
        .position(|&o| o == (dx, dy))
        .expect("unit direction") as u8
}

struct Jumper<'a, G: GridView + ?Sized> {
    grid: &'a G,
    goal: Pos,
}

impl<G: GridView + ?Sized> Jumper<'_, G> {
    #[inline]
    fn open(&self, x: i32, y: i32) -> bool {
        self.grid.walkable(Pos::new(x, y))
    }

    fn has_forced(&self, x: i32, y: i32, dx: i32, dy: i32) -> bool {
        if dx != 0 && dy != 0 {
            (!self.open(x - dx, y) && self.open(x - dx, y + dy))
                || (!self.open(x, y - dy) && self.open(x + dx, y - dy))
        } else if dx != 0 {
            (!self.open(x, y + 1) && self.open(x + dx, y + 1))
                || (!self.open(x, y - 1) && self.open(x + dx, y - 1))
        } else {
            (!self.open(x + 1, y) && self.open(x + 1, y + dy))
                || (!self.open(x - 1, y) && self.open(x - 1, y + dy))
        }
    }

    fn jump(&self, from: Pos, dx: i32, dy: i32) -> Option<Pos> {
        let (mut x, mut y) = (from.x, from.y);
        loop {
            x += dx;
            y += dy;
            if !self.open(x, y) {
                return None;
            }
            let p = Pos::new(x, y);
            if p == self.goal || self.has_forced(x, y, dx, dy) {
                return Some(p);
            }
            if dx != 0
                && dy != 0
                && (self.jump(p, dx, 0).is_some() || self.jump(p, 0, dy).is_some())
            {
                return Some(p);
            }
        }
    }

    /// Directions worth jumping in from `p` when it was entered moving `dir`.
    fn directions(&self, p: Pos, dir: u8, out: &mut Vec<(i32, i32)>) {
        out.clear();
        if dir == NO_DIR {
            out.extend_from_slice(&NEIGHBOR_OFFSETS);
            return;
        }
        let (dx, dy) = NEIGHBOR_OFFSETS[dir as usize];
        let (x, y) = (p.x, p.y);
        if dx != 0 && dy != 0 {
            out.extend_from_slice(&[(dx, dy), (dx, 0), (0, dy)]);
            if !self.open(x - dx, y) {
                out.push((-dx, dy));
            }
            if !self.open(x, y - dy) {
                out.push((dx, -dy));
            }
        } else if dx != 0 {
            out.push((dx, 0));
            if !self.open(x, y + 1) {
                out.push((dx, 1));
            }
            if !self.open(x, y - 1) {
                out.push((dx, -1));
            }
        } else {
            out.push((0, dy));
            if !self.open(x + 1, y) {
                out.push((1, dy));
            }
            if !self.open(x - 1, y) {
                out.push((-1, dy));
            }
        }
    }
}

/// Jump point search. A tile reached at its best cost from a new direction is
/// expanded again, because with unit diagonal cost equal-cost arrivals from
/// different directions are common and each prunes a different neighbour set.
pub fn search_jps<G: GridView + ?Sized>(q: PathQuery<'_, G>) -> Result<SearchOutcome> {
    q.check()?;
    if q.from == q.to {
        return Ok(SearchOutcome { path: Some(Vec::new()), expansions: 0 });
    }
    if !q.diagonal {
        // Jump rules below assume 8-connectivity.
        return search_bfs(q);
    }
    if !q.grid.walkable(q.to) {
        return Ok(SearchOutcome { path: None, expansions: 0 });
    }
    let w = q.grid.width();
    let idx = |p: Pos| (p.y * w + p.x) as usize;
    let area = (w * q.grid.height()) as usize;
    let mut best_g = vec![u32::MAX; area];
    let mut pushed_dirs = vec![0u16; area];
    let mut expanded_dirs = vec![0u16; area];
    let mut nodes: Vec<Node> = Vec::with_capacity(64);
    let mut open: BinaryHeap<Reverse<(u32, u32, u32, u32)>> = BinaryHeap::new();
    let jumper = Jumper { grid: q.grid, goal: q.to };
    let h = |p: Pos| p.chebyshev(q.to) as u32;

    nodes.push(Node { pos: q.from, g: 0, parent: ROOT, dir: NO_DIR });
    best_g[idx(q.from)] = 0;
    pushed_dirs[idx(q.from)] = 1 << NO_DIR;
    open.push(Reverse((h(q.from), h(q.from), 0, 0)));
    let mut seq = 1u32;
    let mut expansions = 0;
    let mut dirs = Vec::with_capacity(8);

    while let Some(Reverse((_, _, _, node_id))) = open.pop() {
        let node = nodes[node_id as usize];
        let i = idx(node.pos);
        if node.g > best_g[i] || expanded_dirs[i] & (1 << node.dir) != 0 {
            continue;
        }
        expanded_dirs[i] |= 1 << node.dir;
        if node.pos == q.to {
            return Ok(SearchOutcome { path: Some(unroll(&nodes, node_id)), expansions });
        }
        expansions += 1;
        jumper.directions(node.pos, node.dir, &mut dirs);
        for &(dx, dy) in &dirs {
            let Some(jp) = jumper.jump(node.pos, dx, dy) else { continue };
            let g = node.g + node.pos.chebyshev(jp) as u32;
            let j = idx(jp);
            let dir = dir_index(dx, dy);
            if g < best_g[j] {
                best_g[j] = g;
                pushed_dirs[j] = 0;
                expanded_dirs[j] = 0;
            } else if g > best_g[j] || pushed_dirs[j] & (1 << dir) != 0 {
                continue;
            }
            pushed_dirs[j] |= 1 << dir;
            nodes.push(Node { pos: jp, g, parent: node_id, dir });
            open.push(Reverse((g + h(jp), h(jp), seq, nodes.len() as u32 - 1)));
            seq += 1;
        }
    }
    Ok(SearchOutcome { path: None, expansions })
}

fn unroll(nodes: &[Node], goal: u32) -> Vec<Pos> {
    let mut jump_points = Vec::new();
    let mut at = goal;
    while at != ROOT {
        jump_points.push(nodes[at as usize].pos);
        at = nodes[at as usize].parent;
    }
    jump_points.reverse();
    let mut path = Vec::new();
    for pair in jump_points.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (dx, dy) = ((b.x - a.x).signum(), (b.y - a.y).signum());
        debug_assert!(dx == 0 || dy == 0 || (b.x - a.x).abs() == (b.y - a.y).abs());
        let mut p = a;
        while p != b {
            p = p.offset(dx, dy);
            path.push(p);
        }
    }
    path
}

/// Checks the structural path contract: contiguous, walkable, cycle-free,
/// ending at `to`.
pub fn is_valid_path<G: GridView + ?Sized>(grid: &G, from: Pos, to: Pos, path: &[Pos]) -> bool {
    let mut seen = std::collections::HashSet::from([from]);
    let mut prev = from;
    for &p in path {
        if prev.chebyshev(p) != 1 || !grid.walkable(p) || !seen.insert(p) {
            return false;
        }
        prev = p;
    }
    prev == to
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid_from(rows: &[&str]) -> BoolGrid {
        let mut g = BoolGrid::open(rows[0].len() as i32, rows.len() as i32);
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.chars().enumerate() {
                g.set(Pos::new(x as i32, y as i32), c != '#');
            }
        }
        g
    }

    #[test]
    fn open_diagonal() {
        let g = BoolGrid::open(5, 5);
        let q = PathQuery::new(&g, Pos::new(0, 0), Pos::new(4, 4));
        let path = find_path_jps(q).unwrap().unwrap();
        assert_eq!(path.len(), 4);
        assert!(is_valid_path(&g, q.from, q.to, &path));
        assert_eq!(find_path_bfs(q).unwrap().unwrap().len(), 4);
    }

    #[test]
    fn same_tile_is_empty_path() {
        let g = BoolGrid::open(3, 3);
        let q = PathQuery::new(&g, Pos::new(1, 1), Pos::new(1, 1));
        assert_eq!(find_path_jps(q).unwrap(), Some(vec![]));
        assert_eq!(find_path_bfs(q).unwrap(), Some(vec![]));
    }

    #[test]
    fn walled_off_target_is_unreachable() {
        let g = grid_from(&[".....", ".###.", ".#.#.", ".###.", "....."]);
        let q = PathQuery::new(&g, Pos::new(0, 0), Pos::new(2, 2));
        assert_eq!(find_path_jps(q).unwrap(), None);
        assert_eq!(find_path_bfs(q).unwrap(), None);
    }

    #[test]
    fn corridor() {
        let g = grid_from(&[".#", ".#", ".#", ".#", ".#", ".#", ".#"]);
        let q = PathQuery::new(&g, Pos::new(0, 0), Pos::new(0, 6));
        assert_eq!(find_path_bfs(q).unwrap().unwrap().len(), 6);
        assert_eq!(find_path_jps(q).unwrap().unwrap().len(), 6);
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let g = BoolGrid::open(3, 3);
        assert!(find_path_jps(PathQuery::new(&g, Pos::new(0, 0), Pos::new(3, 0))).is_err());
        assert!(find_path_bfs(PathQuery::new(&g, Pos::new(-1, 0), Pos::new(1, 0))).is_err());
    }

    #[test]
    fn detour_around_wall() {
        let g = grid_from(&["......", ".####.", "......"]);
        let q = PathQuery::new(&g, Pos::new(0, 1), Pos::new(5, 1));
        let jps = find_path_jps(q).unwrap().unwrap();
        assert!(is_valid_path(&g, q.from, q.to, &jps));
        assert_eq!(jps.len(), find_path_bfs(q).unwrap().unwrap().len());
    }

    #[test]
    fn four_connected_bfs() {
        let g = BoolGrid::open(4, 4);
        let q = PathQuery { diagonal: false, ..PathQuery::new(&g, Pos::new(0, 0), Pos::new(3, 3)) };
        assert_eq!(find_path_bfs(q).unwrap().unwrap().len(), 6);
        assert_eq!(find_path_jps(q).unwrap().unwrap().len(), 6);
    }

    #[test]
    fn jps_expands_less_on_open_map() {
        let g = BoolGrid::open(32, 32);
        let q = PathQuery::new(&g, Pos::new(1, 3), Pos::new(30, 25));
        let jps = search_jps(q).unwrap();
        let bfs = search_bfs(q).unwrap();
        assert!(jps.expansions <= bfs.expansions, "{} > {}", jps.expansions, bfs.expansions);
    }

    fn arb_grid() -> impl Strategy<Value = BoolGrid> {
        (4i32..12, 4i32..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(proptest::bool::weighted(0.7), (w * h) as usize)
                .prop_map(move |open| BoolGrid { width: w, height: h, open })
        })
    }

    proptest! {
        #[test]
        fn jps_matches_bfs_length(g in arb_grid(), a in any::<(u8, u8, u8, u8)>()) {
            let from = Pos::new(a.0 as i32 % g.width, a.1 as i32 % g.height);
            let to = Pos::new(a.2 as i32 % g.width, a.3 as i32 % g.height);
            prop_assume!(g.walkable(from));
            let q = PathQuery::new(&g, from, to);
            let jps = find_path_jps(q).unwrap();
            let bfs = find_path_bfs(q).unwrap();
            prop_assert_eq!(jps.as_ref().map(Vec::len), bfs.as_ref().map(Vec::len));
            if let Some(p) = &jps {
                prop_assert!(is_valid_path(&g, from, to, p));
            }
            if let Some(p) = &bfs {
                prop_assert!(is_valid_path(&g, from, to, p));
            }
        }
    }
}
