//! Tile grid, map text format and resource amounts sidecar.
//!
//! Map text uses one character per tile: `.` grass, `~` water, `#` wall,
//! `G`/`L`/`O` gold, lumber and oil tiles, digits `0`-`5` player spawns on
//! grass. Resource amounts come from a TOML sidecar with per-letter defaults
//! and optional per-tile overrides.

use serde::{Deserialize, Serialize};

use crate::digest::Fnv64;
use crate::error::{EngineError, Result};
use crate::state::EntityId;

pub const MAX_PLAYERS: usize = 6;
pub const DEFAULT_GOLD_AMOUNT: i32 = 1500;
pub const DEFAULT_LUMBER_AMOUNT: i32 = 500;
pub const DEFAULT_OIL_AMOUNT: i32 = 1000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Pos { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Pos {
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn chebyshev(self, other: Pos) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn euclid_sq(self, other: Pos) -> i32 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// The eight surrounding tiles in a fixed order (cardinals first).
    pub fn neighbors(self) -> impl Iterator<Item = Pos> {
        NEIGHBOR_OFFSETS.iter().map(move |&(dx, dy)| self.offset(dx, dy))
    }
}

/// Fixed neighbour order used for every deterministic tie-break.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 8] =
    [(0, -1), (1, 0), (0, 1), (-1, 0), (1, -1), (1, 1), (-1, 1), (-1, -1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terrain {
    Grass,
    Water,
    Wall,
}

impl Terrain {
    pub fn id(self) -> u8 {
        match self {
            Terrain::Grass => 0,
            Terrain::Water => 1,
            Terrain::Wall => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Gold,
    Lumber,
    Oil,
}

impl ResourceKind {
    pub fn letter(self) -> char {
        match self {
            ResourceKind::Gold => 'G',
            ResourceKind::Lumber => 'L',
            ResourceKind::Oil => 'O',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceDeposit {
    pub kind: ResourceKind,
    pub amount: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Tile {
    pub terrain: Terrain,
    pub resource: Option<ResourceDeposit>,
    pub occupant: Option<EntityId>,
}

impl Tile {
    pub const GRASS: Tile = Tile { terrain: Terrain::Grass, resource: None, occupant: None };

    /// Ground units may stand here (ignoring occupancy).
    pub fn is_open_ground(&self) -> bool {
        self.terrain == Terrain::Grass && self.resource.is_none()
    }

    pub fn is_free(&self) -> bool {
        self.is_open_ground() && self.occupant.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileMap {
    width: i32,
    height: i32,
    tiles: Vec<Tile>,
}

impl TileMap {
    pub fn filled(width: i32, height: i32, tile: Tile) -> Self {
        assert!(width > 0 && height > 0, "map dimensions must be positive");
        TileMap { width, height, tiles: vec![tile; (width * height) as usize] }
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn area(&self) -> usize {
        self.tiles.len()
    }

    pub fn in_bounds(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    pub fn check_bounds(&self, p: Pos) -> Result<()> {
        if self.in_bounds(p) {
            Ok(())
        } else {
            Err(EngineError::OutOfBounds { tile: p, width: self.width, height: self.height })
        }
    }

    #[inline]
    pub fn index(&self, p: Pos) -> usize {
        (p.y * self.width + p.x) as usize
    }

    pub fn pos_of(&self, index: usize) -> Pos {
        Pos::new(index as i32 % self.width, index as i32 / self.width)
    }

    #[inline]
    pub fn get(&self, p: Pos) -> Option<&Tile> {
        if self.in_bounds(p) {
            Some(&self.tiles[self.index(p)])
        } else {
            None
        }
    }

    pub fn tile(&self, p: Pos) -> &Tile {
        &self.tiles[self.index(p)]
    }

    pub fn tile_mut(&mut self, p: Pos) -> &mut Tile {
        let i = self.index(p);
        &mut self.tiles[i]
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    /// In bounds, open ground and unoccupied.
    #[inline]
    pub fn is_free(&self, p: Pos) -> bool {
        self.get(p).is_some_and(Tile::is_free)
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Pos::new(x, y)))
    }

    /// Digest over terrain and resource amounts (occupancy excluded).
    pub fn digest(&self) -> u64 {
        let mut h = Fnv64::default();
        h.i32(self.width).i32(self.height);
        for t in &self.tiles {
            h.bytes(&[t.terrain.id()]);
            match t.resource {
                Some(r) => h.bytes(&[r.kind.letter() as u8]).i32(r.amount),
                None => h.bytes(&[0]),
            };
        }
        h.finish()
    }

    /// Renders the grid back to map text (spawns are not part of the grid).
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.tiles.len() + self.height as usize);
        for y in 0..self.height {
            for x in 0..self.width {
                let t = self.tile(Pos::new(x, y));
                out.push(match (t.terrain, t.resource) {
                    (_, Some(r)) => r.kind.letter(),
                    (Terrain::Grass, None) => '.',
                    (Terrain::Water, None) => '~',
                    (Terrain::Wall, None) => '#',
                });
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmountsFile {
    #[serde(rename = "G")]
    gold: Option<i32>,
    #[serde(rename = "L")]
    lumber: Option<i32>,
    #[serde(rename = "O")]
    oil: Option<i32>,
    #[serde(default)]
    tile: Vec<TileAmount>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TileAmount {
    x: i32,
    y: i32,
    amount: i32,
}

/// A parsed map file: the grid plus spawn points indexed by player digit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapFile {
    pub map: TileMap,
    pub spawns: Vec<Option<Pos>>,
}

impl MapFile {
    pub fn parse(text: &str, amounts: Option<&str>) -> Result<MapFile> {
        let amounts: AmountsFile = match amounts {
            Some(src) => toml::from_str(src).map_err(|e| EngineError::Map(format!("amounts: {e}")))?,
            None => AmountsFile::default(),
        };
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(EngineError::Map("map has no rows".into()));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut map = TileMap::filled(width as i32, height as i32, Tile::GRASS);
        let mut spawns: Vec<Option<Pos>> = vec![None; MAX_PLAYERS];
        let amount_of = |kind: ResourceKind| match kind {
            ResourceKind::Gold => amounts.gold.unwrap_or(DEFAULT_GOLD_AMOUNT),
            ResourceKind::Lumber => amounts.lumber.unwrap_or(DEFAULT_LUMBER_AMOUNT),
            ResourceKind::Oil => amounts.oil.unwrap_or(DEFAULT_OIL_AMOUNT),
        };
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(EngineError::Map(format!(
                    "row {y} has {} columns, expected {width}",
                    row.chars().count()
                )));
            }
            for (x, c) in row.chars().enumerate() {
                let p = Pos::new(x as i32, y as i32);
                let tile = map.tile_mut(p);
                match c {
                    '.' => {}
                    '~' => tile.terrain = Terrain::Water,
                    '#' => tile.terrain = Terrain::Wall,
                    'G' | 'L' | 'O' => {
                        let kind = match c {
                            'G' => ResourceKind::Gold,
                            'L' => ResourceKind::Lumber,
                            _ => ResourceKind::Oil,
                        };
                        tile.resource = Some(ResourceDeposit { kind, amount: amount_of(kind) });
                    }
                    '0'..='5' => {
                        let player = c as usize - '0' as usize;
                        if let Some(prev) = spawns[player] {
                            return Err(EngineError::Spawn {
                                tile: p,
                                reason: format!(
                                    "player {player} already spawns at ({}, {})",
                                    prev.x, prev.y
                                ),
                            });
                        }
                        spawns[player] = Some(p);
                    }
                    other => {
                        return Err(EngineError::Map(format!("unknown tile '{other}' at ({x}, {y})")))
                    }
                }
            }
        }
        for t in &amounts.tile {
            let p = Pos::new(t.x, t.y);
            map.check_bounds(p)?;
            if t.amount < 0 {
                return Err(EngineError::Map(format!("negative amount at ({}, {})", t.x, t.y)));
            }
            match &mut map.tile_mut(p).resource {
                Some(r) => r.amount = t.amount,
                None => {
                    return Err(EngineError::Map(format!(
                        "amount given for non-resource tile ({}, {})",
                        t.x, t.y
                    )))
                }
            }
        }
        Ok(MapFile { map, spawns })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grid_and_spawns() {
        let parsed = MapFile::parse("0.G\n~#L\n..1\n", Some("G = 100\n[[tile]]\nx = 2\ny = 1\namount = 7\n")).unwrap();
        assert_eq!(parsed.map.width(), 3);
        assert_eq!(parsed.map.height(), 3);
        assert_eq!(parsed.spawns[0], Some(Pos::new(0, 0)));
        assert_eq!(parsed.spawns[1], Some(Pos::new(2, 2)));
        assert_eq!(parsed.map.tile(Pos::new(2, 0)).resource.unwrap().amount, 100);
        assert_eq!(parsed.map.tile(Pos::new(2, 1)).resource.unwrap().amount, 7);
        assert_eq!(parsed.map.tile(Pos::new(0, 1)).terrain, Terrain::Water);
        assert!(!parsed.map.is_free(Pos::new(1, 1)));
        assert!(parsed.map.is_free(Pos::new(0, 0)));
        assert_eq!(parsed.map.to_text(), "..G\n~#L\n...\n");
    }

    #[test]
    fn rejects_ragged_rows_and_unknown_chars() {
        assert!(MapFile::parse("...\n..\n", None).is_err());
        assert!(MapFile::parse("..x\n", None).is_err());
    }

    #[test]
    fn duplicate_spawn_names_the_tile() {
        let err = MapFile::parse("0.0\n", None).unwrap_err();
        assert!(err.to_string().contains("(2, 0)"), "{err}");
    }
}
