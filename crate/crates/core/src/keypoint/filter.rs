use alloc::vec;
use alloc::vec::Vec;

use crate::image::GrayImage;

/// Normalized 1-D Gaussian kernel with radius `ceil(4 sigma)`.
pub(crate) fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    let radius = libm::ceilf(4.0 * sigma).max(1.0) as usize;
    let denom = 2.0 * sigma as f64 * sigma as f64;
    let raw: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            libm::exp(-d * d / denom)
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| (v / sum) as f32).collect()
}

/// Separable convolution with edge replication.
pub(crate) fn convolve_separable(img: &GrayImage, kernel: &[f32]) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let r = (kernel.len() / 2) as isize;
    let src = img.data();
    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0f32;
            for (k, &kv) in kernel.iter().enumerate() {
                let sx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kv * row[sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for (k, &kv) in kernel.iter().enumerate() {
            let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
            let src_row = &tmp[sy * w..(sy + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += kv * s;
            }
        }
    }
    GrayImage::new(w, h, out).expect("dimensions unchanged")
}

pub(crate) fn gaussian_blur(img: &GrayImage, sigma: f32) -> GrayImage {
    if sigma <= 0.0 {
        return img.clone();
    }
    convolve_separable(img, &gaussian_kernel(sigma))
}

/// Mean over a `(2r+1)^2` window, edges replicated.
pub(crate) fn box_blur(img: &GrayImage, r: usize) -> GrayImage {
    let n = 2 * r + 1;
    convolve_separable(img, &vec![1.0 / n as f32; n])
}

/// Keeps every second pixel in both directions.
pub(crate) fn decimate(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width().div_ceil(2), img.height().div_ceil(2));
    GrayImage::from_fn(w, h, |x, y| img.get(2 * x, 2 * y)).expect("non-empty source")
}
