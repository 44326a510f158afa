//! Deterministic synthetic images for tests and demos.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use crate::image::{GrayImage, Image};

fn unit(rng: &mut ChaCha8Rng) -> f32 {
    (rng.next_u32() >> 8) as f32 / (1u32 << 24) as f32
}

/// Smooth random texture: a sum of seeded Gaussian blobs over a mid-gray
/// background, clamped to `[0, 1]`.
pub fn texture(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = (width * height) as f32;
    let count = ((area / 150.0) as usize).max(4);
    let blobs: Vec<(f32, f32, f32, f32)> = (0..count)
        .map(|_| {
            let x = unit(&mut rng) * width as f32;
            let y = unit(&mut rng) * height as f32;
            let sigma = 1.5 + unit(&mut rng) * 4.0;
            let amp = (unit(&mut rng) - 0.5) * 0.8;
            (x, y, sigma, amp)
        })
        .collect();
    let mut data = alloc::vec![0.5f32; width * height];
    for &(bx, by, sigma, amp) in &blobs {
        let r = (3.0 * sigma) as isize + 1;
        let denom = 2.0 * sigma * sigma;
        let (cx, cy) = (bx as isize, by as isize);
        for y in (cy - r).max(0)..(cy + r + 1).min(height as isize) {
            for x in (cx - r).max(0)..(cx + r + 1).min(width as isize) {
                let (dx, dy) = (x as f32 - bx, y as f32 - by);
                data[y as usize * width + x as usize] +=
                    amp * libm::expf(-(dx * dx + dy * dy) / denom);
            }
        }
    }
    for v in data.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    GrayImage::new(width, height, data).expect("non-empty")
}

/// Gray to 8-bit RGB with equal channels.
pub fn to_image(gray: &GrayImage) -> Image {
    Image::from_gray(gray)
}

/// Uniform noise RGB image.
pub fn noise_rgb(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rgb = (0..width * height * 3)
        .map(|_| (rng.next_u32() >> 24) as u8)
        .collect();
    Image::from_rgb(width, height, rgb).expect("matching length")
}

/// Pastes `patch` into a copy of `base` with its top-left at `(x, y)`.
pub fn paste(base: &GrayImage, patch: &GrayImage, x: usize, y: usize) -> GrayImage {
    GrayImage::from_fn(base.width(), base.height(), |px, py| {
        if px >= x && py >= y && px - x < patch.width() && py - y < patch.height() {
            patch.get(px - x, py - y)
        } else {
            base.get(px, py)
        }
    })
    .expect("same size as base")
}
