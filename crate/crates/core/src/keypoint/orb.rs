use alloc::vec::Vec;
use core::f32::consts::TAU;

use super::filter::box_blur;
use super::orb_pattern::PATTERN;
use super::Keypoint;
use crate::image::GrayImage;

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
const CIRCLE: [(isize, isize); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];
const ARC: usize = 9;
const HARRIS_BLOCK: isize = 7;
const HARRIS_K: f32 = 0.04;
/// Orientation patch radius; detection keeps this far (plus one) from edges.
const PATCH_RADIUS: isize = 15;
const EDGE: usize = PATCH_RADIUS as usize + 1;
const ANGLE_BINS: usize = 30;
const SMOOTH_RADIUS: usize = 2;
const MIN_SIDE: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct OrbParams {
    pub max_keypoints: usize,
    /// FAST intensity difference on `[0, 1]` intensities.
    pub fast_threshold: f32,
    pub levels: usize,
    pub scale_factor: f32,
}

impl Default for OrbParams {
    fn default() -> Self {
        Self {
            max_keypoints: 500,
            fast_threshold: 0.08,
            levels: 8,
            scale_factor: 1.2,
        }
    }
}

/// 256-bit binary descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrbDescriptor {
    pub bits: [u64; 4],
}

impl OrbDescriptor {
    pub fn hamming(&self, other: &Self) -> u32 {
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

struct Level {
    image: GrayImage,
    scale: f32,
}

fn pyramid(img: &GrayImage, p: &OrbParams) -> Vec<Level> {
    let mut out = Vec::new();
    for l in 0..p.levels.max(1) {
        let scale = libm::powf(p.scale_factor, l as f32);
        let w = libm::roundf(img.width() as f32 / scale) as usize;
        let h = libm::roundf(img.height() as f32 / scale) as usize;
        if w.min(h) <= 2 * EDGE {
            break;
        }
        let image = if l == 0 {
            img.clone()
        } else {
            img.resize_bilinear(w, h).expect("non-zero size")
        };
        out.push(Level { image, scale });
    }
    out
}

/// FAST-9 score: summed excess over the threshold on the winning side, or
/// `None` when no arc of nine brighter or darker pixels exists.
fn fast_score(img: &GrayImage, x: usize, y: usize, t: f32) -> Option<f32> {
    let c = img.get(x, y);
    let mut state = [0i8; 16];
    for (s, (dx, dy)) in state.iter_mut().zip(CIRCLE) {
        let v = img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
        *s = if v > c + t {
            1
        } else if v < c - t {
            -1
        } else {
            0
        };
    }
    let has_arc = |want: i8| {
        let mut run = 0;
        for i in 0..32 {
            if state[i % 16] == want {
                run += 1;
                if run >= ARC {
                    return true;
                }
            } else {
                run = 0;
            }
        }
        false
    };
    if !has_arc(1) && !has_arc(-1) {
        return None;
    }
    let (mut bright, mut dark) = (0.0f32, 0.0f32);
    for (dx, dy) in CIRCLE {
        let v = img.get((x as isize + dx) as usize, (y as isize + dy) as usize);
        bright += (v - c - t).max(0.0);
        dark += (c - v - t).max(0.0);
    }
    Some(bright.max(dark))
}

fn harris(img: &GrayImage, x: usize, y: usize) -> f32 {
    let half = HARRIS_BLOCK / 2;
    let g = |x: isize, y: isize| img.get_clamped(x, y);
    let (mut a, mut b, mut c) = (0.0f32, 0.0f32, 0.0f32);
    for dy in -half..=half {
        for dx in -half..=half {
            let (px, py) = (x as isize + dx, y as isize + dy);
            let ix = (g(px + 1, py - 1) + 2.0 * g(px + 1, py) + g(px + 1, py + 1)
                - g(px - 1, py - 1)
                - 2.0 * g(px - 1, py)
                - g(px - 1, py + 1))
                / 8.0;
            let iy = (g(px - 1, py + 1) + 2.0 * g(px, py + 1) + g(px + 1, py + 1)
                - g(px - 1, py - 1)
                - 2.0 * g(px, py - 1)
                - g(px + 1, py - 1))
                / 8.0;
            a += ix * ix;
            b += iy * iy;
            c += ix * iy;
        }
    }
    a * b - c * c - HARRIS_K * (a + b) * (a + b)
}

/// Intensity-centroid orientation of the disc of `radius` around `(x, y)`,
/// in radians from +x towards +y.
pub fn orb_orientation(img: &GrayImage, x: usize, y: usize, radius: usize) -> f32 {
    let r = radius as isize;
    let (mut m10, mut m01) = (0.0f64, 0.0f64);
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy > r * r {
                continue;
            }
            let v = img.get_clamped(x as isize + dx, y as isize + dy) as f64;
            m10 += dx as f64 * v;
            m01 += dy as f64 * v;
        }
    }
    let a = libm::atan2(m01, m10) as f32;
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

struct Candidate {
    level: usize,
    x: usize,
    y: usize,
    response: f32,
}

/// FAST-9 corners over an 8-level pyramid, ranked by Harris response and
/// capped at `max_keypoints`. Images under 32x32 yield none.
pub fn orb_detect(img: &GrayImage, p: &OrbParams) -> Vec<Keypoint> {
    if img.width().min(img.height()) < MIN_SIDE {
        return Vec::new();
    }
    let levels = pyramid(img, p);
    let mut candidates = Vec::new();
    for (li, level) in levels.iter().enumerate() {
        let im = &level.image;
        let (w, h) = (im.width(), im.height());
        let mut scores = alloc::vec![0.0f32; w * h];
        for y in EDGE..h - EDGE {
            for x in EDGE..w - EDGE {
                if let Some(s) = fast_score(im, x, y, p.fast_threshold) {
                    // zero-excess corners still count; keep them above "none"
                    scores[y * w + x] = s + f32::MIN_POSITIVE;
                }
            }
        }
        for y in EDGE..h - EDGE {
            for x in EDGE..w - EDGE {
                let s = scores[y * w + x];
                if s == 0.0 {
                    continue;
                }
                let mut keep = true;
                'nms: for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let n = scores[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
                        let earlier = dy < 0 || (dy == 0 && dx < 0);
                        if n > s || (n == s && earlier) {
                            keep = false;
                            break 'nms;
                        }
                    }
                }
                if keep {
                    candidates.push(Candidate {
                        level: li,
                        x,
                        y,
                        response: harris(im, x, y),
                    });
                }
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.level.cmp(&b.level))
            .then(a.y.cmp(&b.y))
            .then(a.x.cmp(&b.x))
    });
    candidates.truncate(p.max_keypoints);
    candidates
        .into_iter()
        .map(|c| {
            let level = &levels[c.level];
            Keypoint {
                x: c.x as f32 * level.scale,
                y: c.y as f32 * level.scale,
                scale: c.level as f32,
                orientation: orb_orientation(&level.image, c.x, c.y, PATCH_RADIUS as usize),
                response: c.response,
                octave: c.level,
                layer: 0,
            }
        })
        .collect()
}

/// Pattern rotated to each quantized angle, as integer offsets.
fn rotated_patterns() -> Vec<[[isize; 4]; 256]> {
    (0..ANGLE_BINS)
        .map(|bin| {
            let (s, c) = libm::sincosf(bin as f32 * TAU / ANGLE_BINS as f32);
            let rot = |x: i8, y: i8| {
                let (x, y) = (x as f32, y as f32);
                (
                    libm::roundf(x * c - y * s) as isize,
                    libm::roundf(x * s + y * c) as isize,
                )
            };
            let mut out = [[0isize; 4]; 256];
            for (o, p) in out.iter_mut().zip(PATTERN.iter()) {
                let (x1, y1) = rot(p[0], p[1]);
                let (x2, y2) = rot(p[2], p[3]);
                *o = [x1, y1, x2, y2];
            }
            out
        })
        .collect()
}

/// Steered binary tests on the 5x5 box-smoothed pyramid level. Keypoints
/// whose rotated pattern leaves the level image are dropped.
pub fn orb_describe(
    img: &GrayImage,
    keypoints: &[Keypoint],
    p: &OrbParams,
) -> (Vec<Keypoint>, Vec<OrbDescriptor>) {
    if keypoints.is_empty() || img.width().min(img.height()) < MIN_SIDE {
        return (Vec::new(), Vec::new());
    }
    let levels = pyramid(img, p);
    let mut smoothed: Vec<Option<GrayImage>> = alloc::vec![None; levels.len()];
    let patterns = rotated_patterns();
    let mut kept = Vec::new();
    let mut descs = Vec::new();
    for kp in keypoints {
        let Some(level) = levels.get(kp.octave) else {
            continue;
        };
        let im = smoothed[kp.octave].get_or_insert_with(|| box_blur(&level.image, SMOOTH_RADIUS));
        let cx = libm::roundf(kp.x / level.scale) as isize;
        let cy = libm::roundf(kp.y / level.scale) as isize;
        let bin = libm::roundf(kp.orientation * ANGLE_BINS as f32 / TAU) as isize;
        let pattern = &patterns[bin.rem_euclid(ANGLE_BINS as isize) as usize];
        let (w, h) = (im.width() as isize, im.height() as isize);
        let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h;
        if !pattern
            .iter()
            .all(|q| inside(cx + q[0], cy + q[1]) && inside(cx + q[2], cy + q[3]))
        {
            continue;
        }
        let mut bits = [0u64; 4];
        for (i, q) in pattern.iter().enumerate() {
            let a = im.get((cx + q[0]) as usize, (cy + q[1]) as usize);
            let b = im.get((cx + q[2]) as usize, (cy + q[3]) as usize);
            if a < b {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        kept.push(*kp);
        descs.push(OrbDescriptor { bits });
    }
    (kept, descs)
}
