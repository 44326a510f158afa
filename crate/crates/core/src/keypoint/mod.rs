//! SIFT and ORB keypoints, their descriptors, and ratio-test matching.
//!
//! The image-level score for both backends is the number of accepted matches
//! between the query's descriptors and the tile's.

mod filter;
mod orb;
mod orb_pattern;
mod sift;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::{GrayImage, Image};
use crate::scoring::{Backend, ScorerConfig, TileScorer};

pub use orb::{orb_describe, orb_detect, orb_orientation, OrbDescriptor, OrbParams};
pub use sift::{sift_describe, sift_detect, SiftDescriptor, SiftParams};

/// Lowe ratio used unless configured otherwise.
pub const DEFAULT_RATIO: f32 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Keypoint {
    /// Position in base-image pixels.
    pub x: f32,
    pub y: f32,
    /// Blur sigma in base-image pixels for SIFT; pyramid level for ORB.
    pub scale: f32,
    /// Radians, measured from +x towards +y (image rows grow downwards).
    pub orientation: f32,
    /// DoG contrast (SIFT) or Harris score (ORB).
    pub response: f32,
    /// Octave (SIFT) or pyramid level (ORB) the keypoint was found in.
    pub octave: usize,
    /// Scale layer within the octave; always 0 for ORB.
    pub layer: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Match {
    pub query_index: usize,
    pub train_index: usize,
    pub distance: f32,
}

/// Distance between two descriptors of the same kind.
pub trait Descriptor {
    fn distance(&self, other: &Self) -> f32;
}

impl Descriptor for SiftDescriptor {
    fn distance(&self, other: &Self) -> f32 {
        self.euclidean(other)
    }
}

impl Descriptor for OrbDescriptor {
    fn distance(&self, other: &Self) -> f32 {
        self.hamming(other) as f32
    }
}

/// Nearest and second-nearest train distance for one query descriptor.
fn two_nearest<D: Descriptor>(q: &D, train: &[D]) -> Option<(usize, f32, f32)> {
    let mut best: Option<(usize, f32)> = None;
    let mut second = f32::INFINITY;
    for (j, t) in train.iter().enumerate() {
        let d = q.distance(t);
        match best {
            Some((_, bd)) if d >= bd => second = second.min(d),
            Some((_, bd)) => {
                second = bd;
                best = Some((j, d));
            }
            None => best = Some((j, d)),
        }
    }
    best.map(|(j, d)| (j, d, second))
}

/// Ratio-test matching. A query is accepted when its nearest train
/// descriptor is closer than `ratio` times the second nearest; each train
/// descriptor is then kept for at most one query (the closest, ties to the
/// lower query index), so the count never exceeds either side's size.
pub fn match_descriptors<D: Descriptor>(query: &[D], train: &[D], ratio: f32) -> Vec<Match> {
    let mut claimed: Vec<Option<Match>> = alloc::vec![None; train.len()];
    for (i, q) in query.iter().enumerate() {
        let Some((j, d1, d2)) = two_nearest(q, train) else {
            continue;
        };
        if d1 >= ratio * d2 {
            continue;
        }
        let candidate = Match {
            query_index: i,
            train_index: j,
            distance: d1,
        };
        match claimed[j] {
            Some(m) if m.distance <= d1 => {}
            _ => claimed[j] = Some(candidate),
        }
    }
    let mut matches: Vec<Match> = claimed.into_iter().flatten().collect();
    matches.sort_by_key(|m| m.query_index);
    matches
}

/// Descriptors of either kind, for [`match_count`].
#[derive(Debug, Clone, PartialEq)]
pub enum Descriptors {
    Sift(Vec<SiftDescriptor>),
    Orb(Vec<OrbDescriptor>),
}

impl Descriptors {
    pub fn len(&self) -> usize {
        match self {
            Descriptors::Sift(v) => v.len(),
            Descriptors::Orb(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Number of accepted ratio-test matches, and the matches themselves.
pub fn match_count(
    query: &Descriptors,
    train: &Descriptors,
    ratio: f32,
) -> Result<(usize, Vec<Match>)> {
    let matches = match (query, train) {
        (Descriptors::Sift(q), Descriptors::Sift(t)) => match_descriptors(q, t, ratio),
        (Descriptors::Orb(q), Descriptors::Orb(t)) => match_descriptors(q, t, ratio),
        _ => {
            return Err(Error::InvalidScorer(
                "cannot match SIFT against ORB descriptors".into(),
            ))
        }
    };
    Ok((matches.len(), matches))
}

/// How a SIFT tile score is derived from descriptor distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SiftScore {
    #[default]
    MatchCount,
    /// `1 / (1 + mean nearest-neighbour distance)` over query descriptors.
    InverseDistance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeypointParams {
    pub ratio: f32,
    pub sift: SiftParams,
    pub orb: OrbParams,
    pub sift_score: SiftScore,
}

impl Default for KeypointParams {
    fn default() -> Self {
        Self {
            ratio: DEFAULT_RATIO,
            sift: SiftParams::default(),
            orb: OrbParams::default(),
            sift_score: SiftScore::MatchCount,
        }
    }
}

impl KeypointParams {
    /// Reads `ratio`, `max_keypoints`, `fast_threshold`,
    /// `contrast_threshold`, `edge_ratio` and `sift_score` from the scorer
    /// params, keeping defaults for anything absent.
    pub fn from_config(config: &ScorerConfig) -> Result<Self> {
        let mut p = Self::default();
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::InvalidScorer(format!(
                    "param {key} must be positive, got {v}"
                )))
            }
        };
        if let Some(v) = config.number("ratio")? {
            p.ratio = positive("ratio", v)? as f32;
        }
        if let Some(v) = config.number("max_keypoints")? {
            p.orb.max_keypoints = positive("max_keypoints", v)? as usize;
        }
        if let Some(v) = config.number("fast_threshold")? {
            p.orb.fast_threshold = positive("fast_threshold", v)? as f32;
        }
        if let Some(v) = config.number("contrast_threshold")? {
            p.sift.contrast_threshold = positive("contrast_threshold", v)? as f32;
        }
        if let Some(v) = config.number("edge_ratio")? {
            p.sift.edge_ratio = positive("edge_ratio", v)? as f32;
        }
        if let Some(s) = config.text("sift_score")? {
            p.sift_score = match s {
                "match_count" => SiftScore::MatchCount,
                "inverse_distance" => SiftScore::InverseDistance,
                other => {
                    return Err(Error::InvalidScorer(format!(
                        "unknown sift_score {other:?}"
                    )))
                }
            };
        }
        Ok(p)
    }
}

/// Keypoints and descriptors of one image for the given backend.
pub fn extract(
    backend: Backend,
    gray: &GrayImage,
    params: &KeypointParams,
) -> Result<(Vec<Keypoint>, Descriptors)> {
    match backend {
        Backend::Sift => {
            let (kps, desc) = sift::sift_extract(gray, &params.sift);
            Ok((kps, Descriptors::Sift(desc)))
        }
        Backend::Orb => {
            let kps = orb_detect(gray, &params.orb);
            let (kps, desc) = orb_describe(gray, &kps, &params.orb);
            Ok((kps, Descriptors::Orb(desc)))
        }
        other => Err(Error::InvalidScorer(format!(
            "{other} is not a keypoint backend"
        ))),
    }
}

/// Scores tiles by keypoint matches against a fixed query image.
pub struct KeypointScorer {
    backend: Backend,
    params: KeypointParams,
    query: Descriptors,
}

impl KeypointScorer {
    pub fn new(backend: Backend, query: &GrayImage, params: KeypointParams) -> Result<Self> {
        let (_, query) = extract(backend, query, &params)?;
        Ok(Self {
            backend,
            params,
            query,
        })
    }

    pub fn query_descriptors(&self) -> &Descriptors {
        &self.query
    }
}

impl TileScorer for KeypointScorer {
    fn score_tile(&self, tile: &Image) -> Result<f64> {
        let (_, train) = extract(self.backend, tile.gray(), &self.params)?;
        match (&self.query, &train, self.params.sift_score) {
            (Descriptors::Sift(q), Descriptors::Sift(t), SiftScore::InverseDistance) => {
                if q.is_empty() || t.is_empty() {
                    return Ok(0.0);
                }
                let total: f64 = q
                    .iter()
                    .filter_map(|d| two_nearest(d, t))
                    .map(|(_, d1, _)| d1 as f64)
                    .sum();
                Ok(1.0 / (1.0 + total / q.len() as f64))
            }
            _ => Ok(match_count(&self.query, &train, self.params.ratio)?.0 as f64),
        }
    }
}
