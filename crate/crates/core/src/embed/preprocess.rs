use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{resample_plane, Filter, Image};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ResizeMode {
    /// Shorter side to the resolution, then a centered square crop.
    #[default]
    ShortestCenterCrop,
    /// Stretch straight to resolution x resolution.
    Squash,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Interpolation {
    #[default]
    Bicubic,
    Bilinear,
}

/// Encoder input geometry and normalization, supplied by the model bundle.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PreprocessConfig {
    pub resolution: usize,
    pub mean: [f32; 3],
    pub std: [f32; 3],
    #[cfg_attr(feature = "serde", serde(default))]
    pub resize_mode: ResizeMode,
    #[cfg_attr(feature = "serde", serde(default))]
    pub interpolation: Interpolation,
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution == 0 {
            return Err(Error::Preprocess("resolution must be at least 1".into()));
        }
        if self.std.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Preprocess("channel stds must be positive".into()));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Preprocess("channel means must be finite".into()));
        }
        Ok(())
    }
}

/// Python's `round`: ties go to the even neighbour.
fn round_half_even(v: f64) -> i64 {
    let r = libm::round(v);
    if (v - libm::trunc(v)).abs() == 0.5 && (r as i64) % 2 != 0 {
        (r - v.signum()) as i64
    } else {
        r as i64
    }
}

/// Resize, crop and normalize an image into a planar `3 x R x R` tensor.
///
/// Resampling works on 8-bit values with rounding between passes, so the
/// output tracks common 8-bit image libraries closely.
pub fn preprocess_image(image: &Image, cfg: &PreprocessConfig) -> Result<Vec<f32>> {
    cfg.validate()?;
    let r = cfg.resolution;
    let (w, h) = (image.width(), image.height());
    let (rw, rh) = match cfg.resize_mode {
        ResizeMode::Squash => (r, r),
        ResizeMode::ShortestCenterCrop if w <= h => (r, ((r * h) / w).max(r)),
        ResizeMode::ShortestCenterCrop => (((r * w) / h).max(r), r),
    };
    let filter = match cfg.interpolation {
        Interpolation::Bicubic => Filter::Cubic,
        Interpolation::Bilinear => Filter::Triangle,
    };
    let left = round_half_even((rw - r) as f64 / 2.0) as usize;
    let top = round_half_even((rh - r) as f64 / 2.0) as usize;

    let mut out = Vec::with_capacity(3 * r * r);
    let mut plane = Vec::with_capacity(w * h);
    for c in 0..3 {
        plane.clear();
        plane.extend(image.rgb().iter().skip(c).step_by(3).map(|&v| v as f32));
        let resized = if (rw, rh) == (w, h) {
            plane.clone()
        } else {
            resample_plane(&plane, (w, h), (rw, rh), filter, true)
        };
        let (mean, std) = (cfg.mean[c], cfg.std[c]);
        for y in top..top + r {
            for x in left..left + r {
                let v = resized[y * rw + x] / 255.0;
                out.push((v - mean) / std);
            }
        }
    }
    Ok(out)
}
