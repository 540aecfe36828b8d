//! Raw-matrix and raster encodings of a game state.

use std::path::Path;

use image::{GrayImage, Luma, Rgb, RgbImage};

use crate::error::{EngineError, Result};
use crate::map::{ResourceKind, Terrain};
use crate::state::GameState;

/// Channels per tile in the tensor encoding.
pub const CHANNELS: usize = 6;

/// Value written to every channel of a tile hidden by fog of war.
pub const FOG: f32 = -1.0;

/// Channel names in tensor order, as published to clients.
pub const CHANNEL_LAYOUT: [&str; CHANNELS] =
    ["terrain", "resource", "owner", "archetype", "hp", "state"];

/// Meaning of each channel value, as published to clients.
pub const CHANNEL_DOCS: [&str; CHANNELS] = [
    "terrain id: 0 grass, 1 water, 2 wall",
    "resource amount / 1e6 (0 when the tile holds no resource)",
    "owning player index, -1 when no entity",
    "archetype index + 1, 0 when no entity",
    "entity hp / max hp, 0 when no entity",
    "entity state id + 1, 0 when no entity",
];

/// Row-major (height, width, channel) float tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Observation {
    pub fn shape(&self) -> [usize; 3] {
        [self.height, self.width, CHANNELS]
    }

    pub fn at(&self, x: usize, y: usize, channel: usize) -> f32 {
        self.data[(y * self.width + x) * CHANNELS + channel]
    }

    /// Flat little-endian export: three u32 dims (H, W, C) then the floats.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.data.len() * 4);
        for d in self.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Observation> {
        let bad = |msg: &str| EngineError::Io(format!("tensor blob: {msg}"));
        if bytes.len() < 12 {
            return Err(bad("shorter than its header"));
        }
        let dim = |i: usize| u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
        let (height, width, channels) = (dim(0), dim(1), dim(2));
        if channels != CHANNELS {
            return Err(bad("unexpected channel count"));
        }
        let body = &bytes[12..];
        if body.len() != height * width * channels * 4 {
            return Err(bad("length does not match its dims"));
        }
        let data = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Observation { height, width, data })
    }
}

/// Encodes the state from `player`'s point of view. With `fog`, tiles
/// outside the player's vision carry [`FOG`] in every channel.
pub fn raw_tensor(state: &GameState, player: usize, fog: bool) -> Observation {
    let map = state.map();
    let (w, h) = (map.width() as usize, map.height() as usize);
    let mut data = vec![0.0f32; w * h * CHANNELS];
    let visible = fog.then(|| state.visibility(player));
    for (i, tile) in map.tiles().iter().enumerate() {
        let cell = &mut data[i * CHANNELS..(i + 1) * CHANNELS];
        if visible.as_ref().is_some_and(|v| !v[i]) {
            cell.fill(FOG);
            continue;
        }
        cell[0] = tile.terrain.id() as f32;
        cell[1] = tile.resource.map_or(0.0, |r| (r.amount as f64 / 1e6) as f32);
        cell[2] = -1.0;
        if let Some(e) = tile.occupant.and_then(|id| state.live_entity(id)) {
            let max_hp = state.rules().get(e.archetype).max_hp;
            cell[2] = e.owner as f32;
            cell[3] = (e.archetype.0 as u32 + 1) as f32;
            cell[4] = (e.hp.clamp(0, max_hp) as f64 / max_hp as f64) as f32;
            cell[5] = (e.state.id() as u32 + 1) as f32;
        }
    }
    Observation { height: h, width: w, data }
}

/// Luminance of one tile: fixed lookup on terrain, resource, owner and
/// archetype.
fn luminance(state: &GameState, i: usize) -> u8 {
    let tile = &state.map().tiles()[i];
    if let Some(e) = tile.occupant.and_then(|id| state.live_entity(id)) {
        let building = state.rules().get(e.archetype).is_building();
        return 140 + 18 * (e.owner as u8 % 6) + if building { 0 } else { 9 };
    }
    if let Some(r) = tile.resource {
        return match r.kind {
            ResourceKind::Gold => 120,
            ResourceKind::Lumber => 100,
            ResourceKind::Oil => 80,
        };
    }
    match tile.terrain {
        Terrain::Grass => 60,
        Terrain::Water => 30,
        Terrain::Wall => 10,
    }
}

const OWNER_COLORS: [[u8; 3]; 6] = [
    [40, 90, 230],
    [220, 40, 40],
    [240, 200, 40],
    [150, 60, 200],
    [240, 140, 30],
    [30, 200, 200],
];

fn color(state: &GameState, i: usize) -> [u8; 3] {
    let tile = &state.map().tiles()[i];
    if let Some(e) = tile.occupant.and_then(|id| state.live_entity(id)) {
        let [r, g, b] = OWNER_COLORS[e.owner % OWNER_COLORS.len()];
        return if state.rules().get(e.archetype).is_building() {
            [r / 2, g / 2, b / 2]
        } else {
            [r, g, b]
        };
    }
    if let Some(r) = tile.resource {
        return match r.kind {
            ResourceKind::Gold => [212, 175, 55],
            ResourceKind::Lumber => [20, 90, 30],
            ResourceKind::Oil => [25, 25, 25],
        };
    }
    match tile.terrain {
        Terrain::Grass => [110, 170, 80],
        Terrain::Water => [40, 80, 170],
        Terrain::Wall => [90, 90, 90],
    }
}

/// Grayscale raster with one `scale`×`scale` block per tile.
pub fn grayscale_image(state: &GameState, scale: u32) -> GrayImage {
    let scale = scale.max(1);
    let map = state.map();
    let w = map.width() as u32;
    let lum: Vec<u8> = (0..map.area()).map(|i| luminance(state, i)).collect();
    GrayImage::from_fn(w * scale, map.height() as u32 * scale, |x, y| {
        Luma([lum[((y / scale) * w + x / scale) as usize]])
    })
}

/// RGB raster with one `scale`×`scale` block per tile.
pub fn render_rgb(state: &GameState, scale: u32) -> RgbImage {
    let scale = scale.max(1);
    let map = state.map();
    let w = map.width() as u32;
    let colors: Vec<[u8; 3]> = (0..map.area()).map(|i| color(state, i)).collect();
    RgbImage::from_fn(w * scale, map.height() as u32 * scale, |x, y| {
        Rgb(colors[((y / scale) * w + x / scale) as usize])
    })
}

pub fn save_png(image: &RgbImage, path: &Path) -> Result<()> {
    image.save(path).map_err(|e| EngineError::Io(format!("{}: {e}", path.display())))
}

pub fn save_gray_png(image: &GrayImage, path: &Path) -> Result<()> {
    image.save(path).map_err(|e| EngineError::Io(format!("{}: {e}", path.display())))
}

/// PNG bytes of an RGB raster, for streaming.
pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    image
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| EngineError::Io(e.to_string()))?;
    Ok(out.into_inner())
}
