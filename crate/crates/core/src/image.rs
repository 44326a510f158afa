//! Pixel containers, grayscale conversion and resampling.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tiling::Tile;

/// Rec.601 luma of an 8-bit RGB pixel, scaled to `[0, 1]`.
///
/// Computed in integer thousandths so that white maps to exactly `1.0`.
pub fn to_grayscale(r: u8, g: u8, b: u8) -> f32 {
    let luma = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    luma as f32 / 255_000.0
}

/// Single-channel float image, row-major, values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(Error::BufferLength {
                width,
                height,
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the image.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// Bilinear sample at a continuous position (pixel centers at integers).
    pub fn sample_bilinear(&self, x: f32, y: f32) -> f32 {
        let x0 = libm::floorf(x);
        let y0 = libm::floorf(y);
        let fx = x - x0;
        let fy = y - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let a = self.get_clamped(x0, y0);
        let b = self.get_clamped(x0 + 1, y0);
        let c = self.get_clamped(x0, y0 + 1);
        let d = self.get_clamped(x0 + 1, y0 + 1);
        let top = a + (b - a) * fx;
        let bottom = c + (d - c) * fx;
        top + (bottom - top) * fy
    }

    /// Resize with a triangle (bilinear) filter, antialiased when shrinking.
    ///
    /// Same-size requests return an exact copy.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> Result<GrayImage> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if width == self.width && height == self.height {
            return Ok(self.clone());
        }
        let data = resample_plane(
            &self.data,
            (self.width, self.height),
            (width, height),
            Filter::Triangle,
            false,
        );
        GrayImage::new(width, height, data)
    }

    /// Copy of the image rotated 90 degrees clockwise.
    pub fn rotate90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        let mut out = vec![0.0; w * h];
        // new image is h wide, w tall; (x, y) -> (h - 1 - y, x)
        for y in 0..h {
            for x in 0..w {
                out[x * h + (h - 1 - y)] = self.data[y * w + x];
            }
        }
        GrayImage {
            width: h,
            height: w,
            data: out,
        }
    }

    pub fn crop(&self, tile: &Tile) -> Result<GrayImage> {
        tile.check_within(self.width, self.height)?;
        let mut data = Vec::with_capacity(tile.w * tile.h);
        for row in tile.y..tile.y + tile.h {
            let start = row * self.width + tile.x;
            data.extend_from_slice(&self.data[start..start + tile.w]);
        }
        GrayImage::new(tile.w, tile.h, data)
    }
}

/// An 8-bit RGB image together with its grayscale rendition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Image {
    rgb: Vec<u8>,
    gray: GrayImage,
}

impl Image {
    pub fn from_rgb(width: usize, height: usize, rgb: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if rgb.len() != width * height * 3 {
            return Err(Error::BufferLength {
                width,
                height,
                expected: width * height * 3,
                actual: rgb.len(),
            });
        }
        let gray = rgb
            .chunks_exact(3)
            .map(|p| to_grayscale(p[0], p[1], p[2]))
            .collect();
        let gray = GrayImage::new(width, height, gray)?;
        Ok(Self { rgb, gray })
    }

    /// Builds an image whose three channels all carry the given gray level.
    pub fn from_gray(gray: &GrayImage) -> Self {
        let rgb = gray
            .data()
            .iter()
            .flat_map(|&v| {
                let b = libm::roundf(v.clamp(0.0, 1.0) * 255.0) as u8;
                [b, b, b]
            })
            .collect();
        Self::from_rgb(gray.width(), gray.height(), rgb).expect("dimensions already validated")
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.gray.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.gray.height
    }

    #[inline]
    pub fn rgb(&self) -> &[u8] {
        &self.rgb
    }

    #[inline]
    pub fn gray(&self) -> &GrayImage {
        &self.gray
    }

    /// Pixel-exact copy of the region covered by `tile`.
    pub fn crop(&self, tile: &Tile) -> Result<Image> {
        tile.check_within(self.width(), self.height())?;
        let w = self.width();
        let mut rgb = Vec::with_capacity(tile.w * tile.h * 3);
        for row in tile.y..tile.y + tile.h {
            let start = (row * w + tile.x) * 3;
            rgb.extend_from_slice(&self.rgb[start..start + tile.w * 3]);
        }
        let gray = self.gray.crop(tile)?;
        Ok(Image { rgb, gray })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Filter {
    Triangle,
    /// Keys cubic with a = -0.5.
    Cubic,
}

impl Filter {
    fn support(self) -> f32 {
        match self {
            Filter::Triangle => 1.0,
            Filter::Cubic => 2.0,
        }
    }

    fn weight(self, x: f32) -> f32 {
        let x = libm::fabsf(x);
        match self {
            Filter::Triangle => (1.0 - x).max(0.0),
            Filter::Cubic => {
                const A: f32 = -0.5;
                if x < 1.0 {
                    ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
                } else if x < 2.0 {
                    (((x - 5.0) * x + 8.0) * x - 4.0) * A
                } else {
                    0.0
                }
            }
        }
    }
}

/// Per-output-sample contributing input range and normalized weights.
struct AxisWeights {
    bounds: Vec<(usize, usize)>,
    weights: Vec<Vec<f32>>,
}

fn axis_weights(in_len: usize, out_len: usize, filter: Filter) -> AxisWeights {
    let scale = in_len as f32 / out_len as f32;
    let filter_scale = scale.max(1.0);
    let support = filter.support() * filter_scale;
    let mut bounds = Vec::with_capacity(out_len);
    let mut weights = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let center = (i as f32 + 0.5) * scale;
        let lo = libm::floorf(center - support + 0.5).max(0.0) as usize;
        let hi = (libm::floorf(center + support + 0.5) as usize).min(in_len);
        let mut w: Vec<f32> = (lo..hi)
            .map(|x| filter.weight((x as f32 - center + 0.5) / filter_scale))
            .collect();
        let total: f32 = w.iter().sum();
        if total != 0.0 {
            w.iter_mut().for_each(|v| *v /= total);
        }
        bounds.push((lo, hi));
        weights.push(w);
    }
    AxisWeights { bounds, weights }
}

/// Weighted sum taken relative to the first sample, so constant input is
/// reproduced exactly.
#[inline]
fn weighted(values: &[f32], weights: &[f32]) -> f32 {
    let Some(&base) = values.first() else {
        return 0.0;
    };
    base + values
        .iter()
        .zip(weights)
        .map(|(v, w)| (v - base) * w)
        .sum::<f32>()
}

/// Separable resampling of one plane: horizontal pass, then vertical.
///
/// With `quantize`, the intermediate and final values are rounded and
/// clamped to `[0, 255]`, which reproduces 8-bit resamplers.
pub(crate) fn resample_plane(
    src: &[f32],
    (in_w, in_h): (usize, usize),
    (out_w, out_h): (usize, usize),
    filter: Filter,
    quantize: bool,
) -> Vec<f32> {
    let q = |v: f32| {
        if quantize {
            libm::roundf(v).clamp(0.0, 255.0)
        } else {
            v
        }
    };

    let horizontal: Vec<f32> = if in_w == out_w {
        src.to_vec()
    } else {
        let ax = axis_weights(in_w, out_w, filter);
        let mut out = vec![0.0; out_w * in_h];
        for y in 0..in_h {
            let row = &src[y * in_w..(y + 1) * in_w];
            for x in 0..out_w {
                let (lo, hi) = ax.bounds[x];
                out[y * out_w + x] = q(weighted(&row[lo..hi], &ax.weights[x]));
            }
        }
        out
    };

    if in_h == out_h {
        return horizontal;
    }
    let ay = axis_weights(in_h, out_h, filter);
    let mut out = vec![0.0; out_w * out_h];
    let mut column = Vec::new();
    for y in 0..out_h {
        let (lo, hi) = ay.bounds[y];
        for x in 0..out_w {
            column.clear();
            column.extend((lo..hi).map(|sy| horizontal[sy * out_w + x]));
            out[y * out_w + x] = q(weighted(&column, &ay.weights[y]));
        }
    }
    out
}
