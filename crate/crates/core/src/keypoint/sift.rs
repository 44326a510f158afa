use alloc::vec;
use alloc::vec::Vec;
use core::f32::consts::TAU;

use super::filter::{decimate, gaussian_blur};
use super::Keypoint;
use crate::image::GrayImage;

/// Spatial cells per descriptor side and orientation bins per cell.
const DESC_WIDTH: usize = 4;
const DESC_BINS: usize = 8;
pub const SIFT_DESCRIPTOR_LEN: usize = DESC_WIDTH * DESC_WIDTH * DESC_BINS;

const ORI_BINS: usize = 36;
const ORI_PEAK_RATIO: f32 = 0.8;
const ORI_SIGMA_FACTOR: f32 = 1.5;
const ORI_RADIUS_FACTOR: f32 = 3.0 * ORI_SIGMA_FACTOR;
const DESC_SCALE_FACTOR: f32 = 3.0;
const DESC_MAGNITUDE_CLAMP: f32 = 0.2;
/// Blur assumed already present in the input.
const INPUT_SIGMA: f32 = 0.5;
/// Detection ignores this many pixels at each octave's border.
const BORDER: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SiftParams {
    pub sigma: f32,
    pub scales_per_octave: usize,
    /// Minimum DoG contrast on `[0, 1]` intensities, scaled by the number of
    /// scales per octave before comparison.
    pub contrast_threshold: f32,
    /// Maximum principal-curvature ratio.
    pub edge_ratio: f32,
    pub max_refine_steps: usize,
    /// Octaves are added while the octave's shorter side is at least this.
    pub min_octave_side: usize,
}

impl Default for SiftParams {
    fn default() -> Self {
        Self {
            sigma: 1.6,
            scales_per_octave: 3,
            contrast_threshold: 0.03,
            edge_ratio: 10.0,
            max_refine_steps: 5,
            min_octave_side: 16,
        }
    }
}

/// Unit-norm 128-dimensional gradient histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct SiftDescriptor {
    pub values: [f32; SIFT_DESCRIPTOR_LEN],
}

impl SiftDescriptor {
    pub fn euclidean(&self, other: &Self) -> f32 {
        libm::sqrtf(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
        )
    }
}

struct Octave {
    gauss: Vec<GrayImage>,
    dog: Vec<GrayImage>,
}

struct Pyramid {
    octaves: Vec<Octave>,
}

impl Pyramid {
    fn build(img: &GrayImage, p: &SiftParams) -> Self {
        let s = p.scales_per_octave;
        let k = libm::powf(2.0, 1.0 / s as f32);
        // incremental blur taking layer i-1 to layer i
        let mut steps = vec![0.0f32; s + 3];
        for (i, step) in steps.iter_mut().enumerate().skip(1) {
            let prev = p.sigma * libm::powf(k, (i - 1) as f32);
            let total = prev * k;
            *step = libm::sqrtf(total * total - prev * prev);
        }
        let base_blur = libm::sqrtf((p.sigma * p.sigma - INPUT_SIGMA * INPUT_SIGMA).max(0.01));

        let mut octaves: Vec<Octave> = Vec::new();
        let mut seed = gaussian_blur(img, base_blur);
        while seed.width().min(seed.height()) >= p.min_octave_side {
            let mut gauss = Vec::with_capacity(s + 3);
            gauss.push(seed);
            for step in &steps[1..] {
                let next = gaussian_blur(gauss.last().expect("non-empty"), *step);
                gauss.push(next);
            }
            let dog = gauss
                .windows(2)
                .map(|pair| {
                    let data = pair[1]
                        .data()
                        .iter()
                        .zip(pair[0].data())
                        .map(|(a, b)| a - b)
                        .collect();
                    GrayImage::new(pair[0].width(), pair[0].height(), data).expect("same dims")
                })
                .collect();
            seed = decimate(&gauss[s]);
            octaves.push(Octave { gauss, dog });
        }
        Self { octaves }
    }
}

/// Solves `H x = b` for a 3x3 system; `None` when (near) singular.
fn solve3(h: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(h);
    if d.abs() < 1e-18 {
        return None;
    }
    let mut x = [0.0; 3];
    for (col, xc) in x.iter_mut().enumerate() {
        let mut m = h;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *xc = det(m) / d;
    }
    Some(x)
}

struct Extremum {
    octave: usize,
    layer: usize,
    x: usize,
    y: usize,
    offset: [f64; 3],
    contrast: f32,
}

fn is_extremum(dog: &[GrayImage], layer: usize, x: usize, y: usize, threshold: f32) -> bool {
    let v = dog[layer].get(x, y);
    if v.abs() <= threshold {
        return false;
    }
    let mut is_max = v > 0.0;
    let mut is_min = v < 0.0;
    for img in &dog[layer - 1..=layer + 1] {
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                let n = img.get(xx, yy);
                is_max &= v >= n;
                is_min &= v <= n;
            }
        }
        if !(is_max || is_min) {
            return false;
        }
    }
    true
}

/// Quadratic sub-pixel refinement followed by contrast and edge rejection.
fn refine(
    oct: &Octave,
    octave: usize,
    mut layer: usize,
    mut x: usize,
    mut y: usize,
    p: &SiftParams,
) -> Option<Extremum> {
    let dog = &oct.dog;
    let (w, h) = (dog[0].width(), dog[0].height());
    let s = p.scales_per_octave;
    let at = |l: usize, x: usize, y: usize| dog[l].get(x, y) as f64;
    let mut converged = None;
    for _ in 0..p.max_refine_steps {
        let v = at(layer, x, y);
        let grad = [
            (at(layer, x + 1, y) - at(layer, x - 1, y)) * 0.5,
            (at(layer, x, y + 1) - at(layer, x, y - 1)) * 0.5,
            (at(layer + 1, x, y) - at(layer - 1, x, y)) * 0.5,
        ];
        let dxx = at(layer, x + 1, y) + at(layer, x - 1, y) - 2.0 * v;
        let dyy = at(layer, x, y + 1) + at(layer, x, y - 1) - 2.0 * v;
        let dss = at(layer + 1, x, y) + at(layer - 1, x, y) - 2.0 * v;
        let dxy = (at(layer, x + 1, y + 1) - at(layer, x - 1, y + 1) - at(layer, x + 1, y - 1)
            + at(layer, x - 1, y - 1))
            * 0.25;
        let dxs = (at(layer + 1, x + 1, y) - at(layer + 1, x - 1, y) - at(layer - 1, x + 1, y)
            + at(layer - 1, x - 1, y))
            * 0.25;
        let dys = (at(layer + 1, x, y + 1) - at(layer + 1, x, y - 1) - at(layer - 1, x, y + 1)
            + at(layer - 1, x, y - 1))
            * 0.25;
        let hess = [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]];
        let step = solve3(hess, grad)?;
        let offset = [-step[0], -step[1], -step[2]];
        if offset.iter().all(|o| o.abs() < 0.5) {
            let contrast =
                v + 0.5 * (grad[0] * offset[0] + grad[1] * offset[1] + grad[2] * offset[2]);
            converged = Some((offset, contrast, dxx, dyy, dxy));
            break;
        }
        if offset.iter().any(|o| o.abs() > (w + h) as f64) {
            return None;
        }
        let nx = x as f64 + libm::round(offset[0]);
        let ny = y as f64 + libm::round(offset[1]);
        let nl = layer as f64 + libm::round(offset[2]);
        if nl < 1.0
            || nl > s as f64
            || nx < BORDER as f64
            || nx >= (w - BORDER) as f64
            || ny < BORDER as f64
            || ny >= (h - BORDER) as f64
        {
            return None;
        }
        (x, y, layer) = (nx as usize, ny as usize, nl as usize);
    }
    let (offset, contrast, dxx, dyy, dxy) = converged?;
    if contrast.abs() * (s as f64) < p.contrast_threshold as f64 {
        return None;
    }
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let r = p.edge_ratio as f64;
    if det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det {
        return None;
    }
    Some(Extremum {
        octave,
        layer,
        x,
        y,
        offset,
        contrast: contrast.abs() as f32,
    })
}

/// Sigma of a keypoint relative to its own octave.
fn octave_sigma(p: &SiftParams, layer: usize, layer_offset: f64) -> f32 {
    p.sigma
        * libm::powf(
            2.0,
            ((layer as f64 + layer_offset) / p.scales_per_octave as f64) as f32,
        )
}

fn gradient(img: &GrayImage, x: usize, y: usize) -> (f32, f32) {
    (
        img.get(x + 1, y) - img.get(x - 1, y),
        img.get(x, y + 1) - img.get(x, y - 1),
    )
}

fn wrap_angle(a: f32) -> f32 {
    let r = a % TAU;
    if r < 0.0 {
        r + TAU
    } else {
        r
    }
}

/// Dominant gradient orientations around `(x, y)`.
fn orientations(img: &GrayImage, x: usize, y: usize, scl: f32) -> Vec<f32> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let radius = libm::roundf(ORI_RADIUS_FACTOR * scl) as isize;
    let sigma = ORI_SIGMA_FACTOR * scl;
    let denom = 2.0 * sigma * sigma;
    let mut raw = [0.0f32; ORI_BINS];
    for i in -radius..=radius {
        let yy = y as isize + i;
        if yy <= 0 || yy >= h - 1 {
            continue;
        }
        for j in -radius..=radius {
            let xx = x as isize + j;
            if xx <= 0 || xx >= w - 1 {
                continue;
            }
            let (gx, gy) = gradient(img, xx as usize, yy as usize);
            let mag = libm::sqrtf(gx * gx + gy * gy);
            if mag == 0.0 {
                continue;
            }
            let weight = libm::expf(-((i * i + j * j) as f32) / denom);
            let bin = libm::roundf(wrap_angle(libm::atan2f(gy, gx)) * ORI_BINS as f32 / TAU)
                as usize
                % ORI_BINS;
            raw[bin] += weight * mag;
        }
    }
    let n = ORI_BINS;
    let hist: Vec<f32> = (0..n)
        .map(|i| {
            let t = |d: isize| raw[(i as isize + d).rem_euclid(n as isize) as usize];
            (t(-2) + t(2)) / 16.0 + (t(-1) + t(1)) * 4.0 / 16.0 + t(0) * 6.0 / 16.0
        })
        .collect();
    let max = hist.iter().cloned().fold(0.0f32, f32::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 0..n {
        let l = hist[(i + n - 1) % n];
        let r = hist[(i + 1) % n];
        let c = hist[i];
        if c > l && c > r && c >= ORI_PEAK_RATIO * max {
            let shift = 0.5 * (l - r) / (l - 2.0 * c + r);
            out.push(wrap_angle((i as f32 + shift) * TAU / n as f32));
        }
    }
    out
}

fn detect_in(pyr: &Pyramid, p: &SiftParams) -> Vec<Keypoint> {
    let s = p.scales_per_octave;
    let threshold = 0.5 * p.contrast_threshold / s as f32;
    let mut out = Vec::new();
    for (o, oct) in pyr.octaves.iter().enumerate() {
        let (w, h) = (oct.dog[0].width(), oct.dog[0].height());
        if w <= 2 * BORDER || h <= 2 * BORDER {
            continue;
        }
        let factor = (1usize << o) as f32;
        for layer in 1..=s {
            for y in BORDER..h - BORDER {
                for x in BORDER..w - BORDER {
                    if !is_extremum(&oct.dog, layer, x, y, threshold) {
                        continue;
                    }
                    let Some(e) = refine(oct, o, layer, x, y, p) else {
                        continue;
                    };
                    let scl = octave_sigma(p, e.layer, e.offset[2]);
                    for angle in orientations(&oct.gauss[e.layer], e.x, e.y, scl) {
                        let kp = Keypoint {
                            x: ((e.x as f64 + e.offset[0]) * factor as f64) as f32,
                            y: ((e.y as f64 + e.offset[1]) * factor as f64) as f32,
                            scale: scl * factor,
                            orientation: angle,
                            response: e.contrast,
                            octave: e.octave,
                            layer: e.layer,
                        };
                        if out.last() != Some(&kp) {
                            out.push(kp);
                        }
                    }
                }
            }
        }
    }
    out
}

fn describe_one(img: &GrayImage, kp: &Keypoint) -> Option<SiftDescriptor> {
    let factor = (1usize << kp.octave) as f32;
    let scl = kp.scale / factor;
    let (px, py) = (kp.x / factor, kp.y / factor);
    let (w, h) = (img.width() as isize, img.height() as isize);
    let hist_width = DESC_SCALE_FACTOR * scl;
    // the centre cell ring must lie inside the octave image
    if px < hist_width
        || py < hist_width
        || px > (w - 1) as f32 - hist_width
        || py > (h - 1) as f32 - hist_width
    {
        return None;
    }
    let (cx, cy) = (libm::roundf(px) as isize, libm::roundf(py) as isize);
    let d = DESC_WIDTH as f32;
    let n = DESC_BINS as f32;
    let radius = libm::roundf(hist_width * core::f32::consts::SQRT_2 * (d + 1.0) * 0.5) as isize;
    let radius = radius.min(libm::sqrtf((w * w + h * h) as f32) as isize);
    let (sin_t, cos_t) = libm::sincosf(kp.orientation);
    let (sin_t, cos_t) = (sin_t / hist_width, cos_t / hist_width);
    let exp_scale = -1.0 / (d * d * 0.5);

    let mut hist = [0.0f32; SIFT_DESCRIPTOR_LEN];
    for i in -radius..=radius {
        let yy = cy + i;
        if yy <= 0 || yy >= h - 1 {
            continue;
        }
        for j in -radius..=radius {
            let xx = cx + j;
            if xx <= 0 || xx >= w - 1 {
                continue;
            }
            let c_rot = j as f32 * cos_t + i as f32 * sin_t;
            let r_rot = -(j as f32) * sin_t + i as f32 * cos_t;
            let rbin = r_rot + d / 2.0 - 0.5;
            let cbin = c_rot + d / 2.0 - 0.5;
            if !(rbin > -1.0 && rbin < d && cbin > -1.0 && cbin < d) {
                continue;
            }
            let (gx, gy) = gradient(img, xx as usize, yy as usize);
            let mag = libm::sqrtf(gx * gx + gy * gy);
            if mag == 0.0 {
                continue;
            }
            let weight = libm::expf((c_rot * c_rot + r_rot * r_rot) * exp_scale);
            let obin = wrap_angle(libm::atan2f(gy, gx) - kp.orientation) * n / TAU;
            let (r0, c0, o0) = (libm::floorf(rbin), libm::floorf(cbin), libm::floorf(obin));
            let (fr, fc, fo) = (rbin - r0, cbin - c0, obin - o0);
            let v = mag * weight;
            for (dr, wr) in [(0, 1.0 - fr), (1, fr)] {
                let r = r0 as isize + dr;
                if r < 0 || r >= DESC_WIDTH as isize {
                    continue;
                }
                for (dc, wc) in [(0, 1.0 - fc), (1, fc)] {
                    let c = c0 as isize + dc;
                    if c < 0 || c >= DESC_WIDTH as isize {
                        continue;
                    }
                    for (dob, wo) in [(0, 1.0 - fo), (1, fo)] {
                        let ob = (o0 as usize + dob) % DESC_BINS;
                        let idx = (r as usize * DESC_WIDTH + c as usize) * DESC_BINS + ob;
                        hist[idx] += v * wr * wc * wo;
                    }
                }
            }
        }
    }
    let norm = |h: &[f32]| libm::sqrtf(h.iter().map(|v| v * v).sum());
    let n1 = norm(&hist);
    if n1 <= 0.0 {
        return None;
    }
    let clamp = DESC_MAGNITUDE_CLAMP * n1;
    for v in hist.iter_mut() {
        *v = v.min(clamp);
    }
    let n2 = norm(&hist);
    for v in hist.iter_mut() {
        *v /= n2;
    }
    Some(SiftDescriptor { values: hist })
}

fn describe_in(pyr: &Pyramid, keypoints: &[Keypoint]) -> (Vec<Keypoint>, Vec<SiftDescriptor>) {
    let mut kept = Vec::new();
    let mut descs = Vec::new();
    for kp in keypoints {
        let Some(oct) = pyr.octaves.get(kp.octave) else {
            continue;
        };
        let Some(img) = oct.gauss.get(kp.layer) else {
            continue;
        };
        if let Some(d) = describe_one(img, kp) {
            kept.push(*kp);
            descs.push(d);
        }
    }
    (kept, descs)
}

/// Scale-space extrema of the difference-of-Gaussian pyramid, one keypoint
/// per dominant orientation. Images with a side under 16 pixels yield none.
pub fn sift_detect(img: &GrayImage, p: &SiftParams) -> Vec<Keypoint> {
    if img.width().min(img.height()) < p.min_octave_side {
        return Vec::new();
    }
    detect_in(&Pyramid::build(img, p), p)
}

/// Descriptors for `keypoints`. Keypoints too close to the border for a
/// descriptor are dropped, so the returned keypoints may be fewer.
pub fn sift_describe(
    img: &GrayImage,
    keypoints: &[Keypoint],
    p: &SiftParams,
) -> (Vec<Keypoint>, Vec<SiftDescriptor>) {
    if keypoints.is_empty() || img.width().min(img.height()) < p.min_octave_side {
        return (Vec::new(), Vec::new());
    }
    describe_in(&Pyramid::build(img, p), keypoints)
}

/// Detection and description sharing one pyramid.
pub(crate) fn sift_extract(
    img: &GrayImage,
    p: &SiftParams,
) -> (Vec<Keypoint>, Vec<SiftDescriptor>) {
    if img.width().min(img.height()) < p.min_octave_side {
        return (Vec::new(), Vec::new());
    }
    let pyr = Pyramid::build(img, p);
    let kps = detect_in(&pyr, p);
    describe_in(&pyr, &kps)
}
