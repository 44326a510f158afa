//! Empirical null distributions and add-one p-values.
//!
//! Three ways of sampling "object absent" similarities:
//!
//! * mechanism 1: the query against every reference image, one
//!   max-over-tiles score per image;
//! * mechanism 2: a pool of unrelated decoy queries against the target
//!   image itself, one null per target;
//! * mechanism 3: the query against every tile of every reference image,
//!   pooled without reduction.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::{ImageRecord, QueryObject};
use crate::error::{Error, Result};
use crate::scoring::{score_image, Aggregation, ScoredImage, TileScorer};
use crate::tiling::{generate_tiles, TileSpec};

/// Nulls smaller than this cannot resolve p below 0.05.
pub const MIN_RECOMMENDED_NULL: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub enum Mechanism {
    ReferenceImages,
    DecoyQueries,
    ReferenceTiles,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [
        Mechanism::ReferenceImages,
        Mechanism::DecoyQueries,
        Mechanism::ReferenceTiles,
    ];

    pub fn id(self) -> u8 {
        match self {
            Mechanism::ReferenceImages => 1,
            Mechanism::DecoyQueries => 2,
            Mechanism::ReferenceTiles => 3,
        }
    }

    pub fn from_id(id: u8) -> Result<Self, String> {
        match id {
            1 => Ok(Mechanism::ReferenceImages),
            2 => Ok(Mechanism::DecoyQueries),
            3 => Ok(Mechanism::ReferenceTiles),
            other => Err(format!(
                "unknown p-value mechanism {other}; expected 1, 2 or 3"
            )),
        }
    }

    /// Whether the null is built from reference images.
    pub fn needs_references(self) -> bool {
        self != Mechanism::DecoyQueries
    }
}

impl TryFrom<u8> for Mechanism {
    type Error = String;

    fn try_from(id: u8) -> Result<Self, String> {
        Mechanism::from_id(id)
    }
}

impl From<Mechanism> for u8 {
    fn from(m: Mechanism) -> u8 {
        m.id()
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// Where a null's samples came from.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NullSource {
    /// Live query name (mechanisms 1 and 3) or target image id (mechanism 2).
    pub subject: String,
    /// Reference image ids or decoy query names, in sampling order.
    pub members: Vec<String>,
}

/// Sorted, finite, non-empty sample of null similarities.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawNull"))]
pub struct NullDistribution {
    mechanism: Mechanism,
    samples: Vec<f64>,
    source: NullSource,
}

#[cfg(feature = "serde")]
#[derive(serde::Deserialize)]
struct RawNull {
    mechanism: Mechanism,
    samples: Vec<f64>,
    source: NullSource,
}

#[cfg(feature = "serde")]
impl TryFrom<RawNull> for NullDistribution {
    type Error = Error;

    fn try_from(raw: RawNull) -> Result<Self> {
        NullDistribution::new(raw.mechanism, raw.samples, raw.source)
    }
}

impl NullDistribution {
    pub fn new(mechanism: Mechanism, mut samples: Vec<f64>, source: NullSource) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyNull);
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteNull);
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self {
            mechanism,
            samples,
            source,
        })
    }

    pub fn mechanism(&self) -> Mechanism {
        self.mechanism
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn source(&self) -> &NullSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// True when the null is too small to resolve p below 0.05.
    pub fn is_undersized(&self) -> bool {
        self.len() < MIN_RECOMMENDED_NULL
    }

    /// Number of samples `>= observed`; NaN counts as below everything.
    pub fn count_at_least(&self, observed: f64) -> usize {
        if observed.is_nan() {
            return self.samples.len();
        }
        self.samples.len() - self.samples.partition_point(|&s| s < observed)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PValueResult {
    pub image_id: String,
    pub observed: f64,
    pub p: f64,
    pub null_size: usize,
    pub mechanism: Mechanism,
}

/// `(1 + #{s >= observed}) / (1 + N)`; ties count against significance.
pub fn p_value(image_id: &str, observed: f64, null: &NullDistribution) -> PValueResult {
    let n = null.len();
    PValueResult {
        image_id: image_id.to_string(),
        observed,
        p: (1 + null.count_at_least(observed)) as f64 / (1 + n) as f64,
        null_size: n,
        mechanism: null.mechanism(),
    }
}

/// Queries unrelated to the live one, for mechanism 2.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoyPool {
    decoys: Vec<QueryObject>,
}

impl DecoyPool {
    /// Rejects an empty pool and any decoy whose payload equals the live
    /// query's.
    pub fn new(decoys: Vec<QueryObject>, live: &QueryObject) -> Result<Self> {
        if decoys.is_empty() {
            return Err(Error::EmptyDecoys);
        }
        if let Some(d) = decoys.iter().find(|d| d.payload == live.payload) {
            return Err(Error::DecoyIsQuery(d.name.clone()));
        }
        Ok(Self { decoys })
    }

    pub fn decoys(&self) -> &[QueryObject] {
        &self.decoys
    }

    pub fn len(&self) -> usize {
        self.decoys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decoys.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.decoys.iter().map(|d| d.name.clone()).collect()
    }
}

/// Mechanism 1 or 3 null from already scored references. Mechanism 3 needs
/// the per-tile scores to have been kept.
pub fn null_from_reference_scores(
    mechanism: Mechanism,
    query_name: &str,
    references: &[ScoredImage],
) -> Result<NullDistribution> {
    if references.is_empty() {
        return Err(Error::EmptyReferences);
    }
    let samples = match mechanism {
        Mechanism::ReferenceImages => references.iter().map(|r| r.similarity).collect(),
        Mechanism::ReferenceTiles => {
            let mut all = Vec::new();
            for r in references {
                let tiles = r.per_tile_scores.as_ref().ok_or_else(|| {
                    Error::InvalidScorer(format!(
                        "reference {} was scored without tile scores",
                        r.image_id
                    ))
                })?;
                all.extend(tiles.iter().map(|(_, s)| *s));
            }
            all
        }
        Mechanism::DecoyQueries => {
            return Err(Error::InvalidScorer(
                "mechanism 2 is built from decoy queries".into(),
            ));
        }
    };
    let source = NullSource {
        subject: query_name.to_string(),
        members: references.iter().map(|r| r.image_id.clone()).collect(),
    };
    NullDistribution::new(mechanism, samples, source)
}

fn score_references<S: TileScorer + ?Sized>(
    scorer: &S,
    references: &[ImageRecord],
    spec: &TileSpec,
    aggregation: Aggregation,
    keep_tiles: bool,
) -> Result<Vec<ScoredImage>> {
    references
        .iter()
        .map(|r| {
            let tiles = generate_tiles(r.width(), r.height(), spec)?;
            score_image(scorer, &r.id, &r.image, &tiles, aggregation, keep_tiles)
        })
        .collect()
}

/// Image-level null: the query against every reference image.
pub fn build_null_m1<S: TileScorer + ?Sized>(
    query: &QueryObject,
    references: &[ImageRecord],
    spec: &TileSpec,
    scorer: &S,
    aggregation: Aggregation,
) -> Result<NullDistribution> {
    if references.is_empty() {
        return Err(Error::EmptyReferences);
    }
    let scored = score_references(scorer, references, spec, aggregation, false)?;
    null_from_reference_scores(Mechanism::ReferenceImages, &query.name, &scored)
}

/// Per-target null: each decoy's scorer against this target image.
/// `decoy_scorers[i]` must be bound to `decoys.decoys()[i]`.
pub fn build_null_m2<S: TileScorer>(
    target: &ImageRecord,
    decoys: &DecoyPool,
    decoy_scorers: &[S],
    spec: &TileSpec,
    aggregation: Aggregation,
) -> Result<NullDistribution> {
    if decoys.is_empty() || decoy_scorers.is_empty() {
        return Err(Error::EmptyDecoys);
    }
    if decoy_scorers.len() != decoys.len() {
        return Err(Error::InvalidScorer(format!(
            "{} decoy scorers for {} decoys",
            decoy_scorers.len(),
            decoys.len()
        )));
    }
    let tiles = generate_tiles(target.width(), target.height(), spec)?;
    let samples = decoy_scorers
        .iter()
        .map(|s| {
            score_image(s, &target.id, &target.image, &tiles, aggregation, false)
                .map(|r| r.similarity)
        })
        .collect::<Result<Vec<f64>>>()?;
    NullDistribution::new(
        Mechanism::DecoyQueries,
        samples,
        NullSource {
            subject: target.id.clone(),
            members: decoys.names(),
        },
    )
}

/// Tile-level null: every tile score of every reference image, pooled.
pub fn build_null_m3<S: TileScorer + ?Sized>(
    query: &QueryObject,
    references: &[ImageRecord],
    spec: &TileSpec,
    scorer: &S,
    aggregation: Aggregation,
) -> Result<NullDistribution> {
    if references.is_empty() {
        return Err(Error::EmptyReferences);
    }
    let scored = score_references(scorer, references, spec, aggregation, true)?;
    null_from_reference_scores(Mechanism::ReferenceTiles, &query.name, &scored)
}
