//! Square sub-image windows over a target image.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;

/// A rectangular window in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tile {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Tile {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    pub const fn full(width: usize, height: usize) -> Self {
        Self {
            x: 0,
            y: 0,
            w: width,
            h: height,
        }
    }

    pub fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.w == 0 || self.h == 0 || self.x + self.w > width || self.y + self.h > height {
            return Err(Error::TileOutOfBounds {
                x: self.x,
                y: self.y,
                w: self.w,
                h: self.h,
                width,
                height,
            });
        }
        Ok(())
    }
}

/// Window sizes and overlap used to cut tiles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct TileSpec {
    /// Window side as a fraction of the shorter image side, ascending.
    pub window_fractions: Vec<f64>,
    pub overlap_fraction: f64,
    pub include_full_image: bool,
}

impl Default for TileSpec {
    fn default() -> Self {
        Self {
            window_fractions: vec![0.35, 0.6, 1.0],
            overlap_fraction: 0.5,
            include_full_image: true,
        }
    }
}

impl TileSpec {
    pub fn full_image_only() -> Self {
        Self {
            window_fractions: vec![1.0],
            overlap_fraction: 0.0,
            include_full_image: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_fractions.is_empty() {
            return Err(Error::InvalidTileSpec("window_fractions is empty".into()));
        }
        if let Some(f) = self
            .window_fractions
            .iter()
            .find(|f| !(f.is_finite() && **f > 0.0 && **f <= 1.0))
        {
            return Err(Error::InvalidTileSpec(format!(
                "window fraction {f} not in (0, 1]"
            )));
        }
        if self.window_fractions.windows(2).any(|p| p[0] > p[1]) {
            return Err(Error::InvalidTileSpec(
                "window_fractions must be ascending".into(),
            ));
        }
        if !(self.overlap_fraction >= 0.0 && self.overlap_fraction < 1.0) {
            return Err(Error::InvalidTileSpec(format!(
                "overlap {} not in [0, 1)",
                self.overlap_fraction
            )));
        }
        Ok(())
    }
}

/// Grid offsets along one axis, with a final window flushed to the far edge.
fn axis_offsets(len: usize, side: usize, stride: usize) -> Vec<usize> {
    let mut offsets = Vec::new();
    let mut p = 0;
    while p + side <= len {
        offsets.push(p);
        p += stride;
    }
    let last = len - side;
    if offsets.last() != Some(&last) {
        offsets.push(last);
    }
    offsets
}

/// Enumerates windows for an image of `width` x `height` pixels.
///
/// Order is fraction-major then row-major; the full-image window, when
/// requested and not already produced, is appended last.
pub fn generate_tiles(width: usize, height: usize, spec: &TileSpec) -> Result<Vec<Tile>> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    spec.validate()?;
    let short = width.min(height);
    let mut tiles: Vec<Tile> = Vec::new();
    let push = |t: Tile, tiles: &mut Vec<Tile>| {
        if !tiles.contains(&t) {
            tiles.push(t);
        }
    };
    for &fraction in &spec.window_fractions {
        let side = (libm::round(fraction * short as f64) as usize).clamp(1, short);
        let stride = (libm::round(side as f64 * (1.0 - spec.overlap_fraction)) as usize).max(1);
        let xs = axis_offsets(width, side, stride);
        let ys = axis_offsets(height, side, stride);
        for &y in &ys {
            for &x in &xs {
                push(Tile::new(x, y, side, side), &mut tiles);
            }
        }
    }
    if spec.include_full_image {
        push(Tile::full(width, height), &mut tiles);
    }
    Ok(tiles)
}

/// Pixel-exact crop of `image` to `tile`.
pub fn crop(image: &Image, tile: &Tile) -> Result<Image> {
    image.crop(tile)
}
