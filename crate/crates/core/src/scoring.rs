//! The scorer contract shared by every backend, image-level aggregation
//! over tiles, and the raw pixel-cosine backend.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::{QueryKind, QueryObject};
use crate::embed::{EmbeddingProvider, EmbeddingScorer};
use crate::error::{Error, Result};
use crate::image::{GrayImage, Image};
use crate::keypoint::{KeypointParams, KeypointScorer};
use crate::tiling::Tile;

/// Side length both operands are resampled to before a pixel cosine.
pub const PIXEL_COSINE_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Backend {
    EmbedImageQuery,
    EmbedTextQuery,
    Sift,
    Orb,
    PixelCosine,
}

impl Backend {
    pub const ALL: [Backend; 5] = [
        Backend::EmbedImageQuery,
        Backend::EmbedTextQuery,
        Backend::Sift,
        Backend::Orb,
        Backend::PixelCosine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::EmbedImageQuery => "embed_image_query",
            Backend::EmbedTextQuery => "embed_text_query",
            Backend::Sift => "sift",
            Backend::Orb => "orb",
            Backend::PixelCosine => "pixel_cosine",
        }
    }

    pub fn is_embedding(self) -> bool {
        matches!(self, Backend::EmbedImageQuery | Backend::EmbedTextQuery)
    }

    /// The query kind this backend consumes.
    pub fn query_kind(self) -> QueryKind {
        match self {
            Backend::EmbedTextQuery => QueryKind::Text,
            _ => QueryKind::Image,
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        Backend::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| format!("unknown backend {s:?}"))
    }
}

/// A backend parameter value from the run configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum ParamValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScorerConfig {
    pub backend: Backend,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub model_id: Option<String>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub params: BTreeMap<String, ParamValue>,
}

impl ScorerConfig {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            model_id: None,
            params: BTreeMap::new(),
        }
    }

    pub fn embedding(backend: Backend, model_id: impl Into<String>) -> Self {
        Self {
            backend,
            model_id: Some(model_id.into()),
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: ParamValue) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (self.backend.is_embedding(), &self.model_id) {
            (true, None) => Err(Error::InvalidScorer(format!(
                "{} requires a model_id",
                self.backend
            ))),
            (false, Some(_)) => Err(Error::InvalidScorer(format!(
                "{} does not take a model_id",
                self.backend
            ))),
            _ => Ok(()),
        }
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Number(v)) => Ok(Some(*v)),
            Some(other) => Err(Error::InvalidScorer(format!(
                "param {key} must be a number, got {other:?}"
            ))),
        }
    }

    pub fn text(&self, key: &str) -> Result<Option<&str>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Text(v)) => Ok(Some(v)),
            Some(other) => Err(Error::InvalidScorer(format!(
                "param {key} must be a string, got {other:?}"
            ))),
        }
    }

    /// Label used in metric tables: the model id for embedding backends,
    /// the method name otherwise.
    pub fn model_name(&self) -> String {
        match self.backend {
            Backend::EmbedImageQuery | Backend::EmbedTextQuery => {
                self.model_id.clone().unwrap_or_default()
            }
            Backend::Sift => "SIFT".into(),
            Backend::Orb => "Orb".into(),
            Backend::PixelCosine => "Cosine".into(),
        }
    }

    /// `images` / `text` for embedding backends, blank for the rest.
    pub fn object_type(&self) -> &'static str {
        match self.backend {
            Backend::EmbedImageQuery => "images",
            Backend::EmbedTextQuery => "text",
            _ => "",
        }
    }
}

/// How tile scores reduce to one image-level similarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Aggregation {
    #[default]
    Max,
    Mean,
}

/// A scorer bound to one query. Higher scores mean more similar.
pub trait TileScorer: Send + Sync {
    fn score_tile(&self, tile: &Image) -> Result<f64>;

    /// Scores several tiles; backends with batched inference override this.
    fn score_tiles(&self, tiles: &[Image]) -> Result<Vec<f64>> {
        tiles.iter().map(|t| self.score_tile(t)).collect()
    }
}

impl<T: TileScorer + ?Sized> TileScorer for Box<T> {
    fn score_tile(&self, tile: &Image) -> Result<f64> {
        (**self).score_tile(tile)
    }

    fn score_tiles(&self, tiles: &[Image]) -> Result<Vec<f64>> {
        (**self).score_tiles(tiles)
    }
}

impl<T: TileScorer + ?Sized> TileScorer for Arc<T> {
    fn score_tile(&self, tile: &Image) -> Result<f64> {
        (**self).score_tile(tile)
    }

    fn score_tiles(&self, tiles: &[Image]) -> Result<Vec<f64>> {
        (**self).score_tiles(tiles)
    }
}

/// Image-level similarity with the tile that produced it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScoredImage {
    pub image_id: String,
    pub similarity: f64,
    pub best_tile: Tile,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub per_tile_scores: Option<Vec<(Tile, f64)>>,
}

/// Reduces per-tile scores (in tile order) to a [`ScoredImage`].
///
/// The best tile is the first maximum; ties never depend on evaluation order.
pub fn aggregate(
    image_id: &str,
    tiles: &[Tile],
    scores: &[f64],
    aggregation: Aggregation,
    keep_tiles: bool,
) -> Result<ScoredImage> {
    if tiles.is_empty() {
        return Err(Error::EmptyTiles);
    }
    debug_assert_eq!(tiles.len(), scores.len());
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    let similarity = match aggregation {
        Aggregation::Max => scores[best],
        Aggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
    };
    Ok(ScoredImage {
        image_id: image_id.to_string(),
        similarity,
        best_tile: tiles[best],
        per_tile_scores: keep_tiles
            .then(|| tiles.iter().copied().zip(scores.iter().copied()).collect()),
    })
}

/// Scores every tile of `image` and reduces to an image-level similarity.
pub fn score_image<S: TileScorer + ?Sized>(
    scorer: &S,
    image_id: &str,
    image: &Image,
    tiles: &[Tile],
    aggregation: Aggregation,
    keep_tiles: bool,
) -> Result<ScoredImage> {
    if tiles.is_empty() {
        return Err(Error::EmptyTiles);
    }
    let crops = tiles
        .iter()
        .map(|t| image.crop(t))
        .collect::<Result<Vec<_>>>()?;
    let scores = scorer.score_tiles(&crops)?;
    aggregate(image_id, tiles, &scores, aggregation, keep_tiles)
}

/// Cosine of two equal-length vectors; zero when either has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (libm::sqrt(na) * libm::sqrt(nb))).clamp(-1.0, 1.0)
}

/// Cosine between two grayscale images after resampling both to 64x64.
pub fn pixel_cosine(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let a = a.resize_bilinear(PIXEL_COSINE_SIZE, PIXEL_COSINE_SIZE)?;
    let b = b.resize_bilinear(PIXEL_COSINE_SIZE, PIXEL_COSINE_SIZE)?;
    Ok(cosine(a.data(), b.data()))
}

pub struct PixelCosineScorer {
    query: GrayImage,
}

impl PixelCosineScorer {
    pub fn new(query: &Image) -> Result<Self> {
        let query = query
            .gray()
            .resize_bilinear(PIXEL_COSINE_SIZE, PIXEL_COSINE_SIZE)?;
        Ok(Self { query })
    }
}

impl TileScorer for PixelCosineScorer {
    fn score_tile(&self, tile: &Image) -> Result<f64> {
        let t = tile
            .gray()
            .resize_bilinear(PIXEL_COSINE_SIZE, PIXEL_COSINE_SIZE)?;
        Ok(cosine(self.query.data(), t.data()))
    }
}

fn check_compatible(config: &ScorerConfig, query: &QueryObject) -> Result<()> {
    let wanted = config.backend.query_kind();
    if query.kind() != wanted {
        return Err(Error::IncompatibleQuery {
            query: query.kind().as_str(),
            backend: config.backend.as_str(),
        });
    }
    Ok(())
}

/// Binds `config` to `query`, doing the per-query work (embedding, keypoint
/// extraction) once.
pub fn build_scorer(
    config: &ScorerConfig,
    query: &QueryObject,
    provider: Option<Arc<dyn EmbeddingProvider>>,
) -> Result<Box<dyn TileScorer>> {
    config.validate()?;
    check_compatible(config, query)?;
    match config.backend {
        Backend::PixelCosine => {
            let img = query.as_image().expect("kind checked");
            Ok(Box::new(PixelCosineScorer::new(img)?))
        }
        Backend::Sift | Backend::Orb => {
            let img = query.as_image().expect("kind checked");
            let params = KeypointParams::from_config(config)?;
            Ok(Box::new(KeypointScorer::new(
                config.backend,
                img.gray(),
                params,
            )?))
        }
        Backend::EmbedImageQuery | Backend::EmbedTextQuery => {
            let provider = provider.ok_or_else(|| {
                Error::InvalidScorer(format!("{} needs an embedding provider", config.backend))
            })?;
            let batch = match config.number("batch_size")? {
                Some(b) if b >= 1.0 => b as usize,
                Some(b) => return Err(Error::InvalidScorer(format!("batch_size {b} < 1"))),
                None => crate::embed::DEFAULT_BATCH_SIZE,
            };
            Ok(Box::new(EmbeddingScorer::new(provider, query, batch)?))
        }
    }
}

/// One-shot score of a single sub-image. Prefer [`build_scorer`] when scoring
/// many tiles against the same query.
pub fn score_tile(
    query: &QueryObject,
    sub_image: &Image,
    config: &ScorerConfig,
    provider: Option<Arc<dyn EmbeddingProvider>>,
) -> Result<f64> {
    build_scorer(config, query, provider)?.score_tile(sub_image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::MockEmbedder;
    use proptest::prelude::*;

    struct Fixed(Vec<f64>);

    impl TileScorer for Fixed {
        fn score_tile(&self, _: &Image) -> Result<f64> {
            unreachable!()
        }

        fn score_tiles(&self, tiles: &[Image]) -> Result<Vec<f64>> {
            assert_eq!(tiles.len(), self.0.len());
            Ok(self.0.clone())
        }
    }

    fn gray_image(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> Image {
        Image::from_gray(&GrayImage::from_fn(w, h, f).unwrap())
    }

    fn three_tiles() -> Vec<Tile> {
        alloc::vec![
            Tile::new(0, 0, 2, 2),
            Tile::new(2, 0, 2, 2),
            Tile::new(0, 2, 2, 2)
        ]
    }

    #[test]
    fn max_aggregation_picks_first_best() {
        let img = gray_image(4, 4, |_, _| 0.0);
        let s = score_image(
            &Fixed(alloc::vec![0.1, 0.9, 0.3]),
            "a",
            &img,
            &three_tiles(),
            Aggregation::Max,
            true,
        )
        .unwrap();
        assert_eq!(s.similarity, 0.9);
        assert_eq!(s.best_tile, three_tiles()[1]);
        assert_eq!(s.per_tile_scores.as_ref().unwrap().len(), 3);

        let tiles = &three_tiles()[..2];
        let s = score_image(
            &Fixed(alloc::vec![0.5, 0.5]),
            "a",
            &img,
            tiles,
            Aggregation::Max,
            false,
        )
        .unwrap();
        assert_eq!(s.best_tile, tiles[0]);
        assert!(s.per_tile_scores.is_none());
    }

    #[test]
    fn mean_aggregation() {
        let img = gray_image(4, 4, |_, _| 0.0);
        let s = score_image(
            &Fixed(alloc::vec![0.1, 0.9, 0.2]),
            "a",
            &img,
            &three_tiles(),
            Aggregation::Mean,
            false,
        )
        .unwrap();
        assert!((s.similarity - 0.4).abs() < 1e-12);
        assert_eq!(s.best_tile, three_tiles()[1]);
    }

    #[test]
    fn empty_tiles_and_nan_rejected() {
        let img = gray_image(4, 4, |_, _| 0.0);
        assert_eq!(
            score_image(
                &Fixed(alloc::vec![]),
                "a",
                &img,
                &[],
                Aggregation::Max,
                false
            ),
            Err(Error::EmptyTiles)
        );
        assert_eq!(
            aggregate(
                "a",
                &three_tiles(),
                &[0.1, f64::NAN, 0.2],
                Aggregation::Max,
                false
            ),
            Err(Error::NonFiniteScore(1))
        );
    }

    #[test]
    fn single_full_tile_equals_tile_score() {
        let img = gray_image(16, 16, |x, y| ((x * 7 + y * 3) % 11) as f32 / 10.0);
        let query = QueryObject::image("q", gray_image(16, 16, |x, _| x as f32 / 15.0));
        let cfg = ScorerConfig::new(Backend::PixelCosine);
        let scorer = build_scorer(&cfg, &query, None).unwrap();
        let whole = score_image(
            &scorer,
            "t",
            &img,
            &[Tile::full(16, 16)],
            Aggregation::Max,
            false,
        )
        .unwrap();
        assert_eq!(
            whole.similarity,
            score_tile(&query, &img, &cfg, None).unwrap()
        );
    }

    #[test]
    fn pixel_cosine_examples() {
        let a = GrayImage::from_fn(20, 20, |x, y| ((x + y) % 5) as f32 / 4.0).unwrap();
        assert!((pixel_cosine(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let c1 = GrayImage::filled(30, 30, 0.5).unwrap();
        let c2 = GrayImage::filled(10, 10, 0.9).unwrap();
        assert!((pixel_cosine(&c1, &c2).unwrap() - 1.0).abs() < 1e-12);

        // already 64x64, so no resampling happens
        let mut va = alloc::vec![0.0f32; 64 * 64];
        let mut vb = va.clone();
        va[0] = 1.0;
        vb[0] = 1.0;
        vb[1] = 1.0;
        let a = GrayImage::new(64, 64, va).unwrap();
        let b = GrayImage::new(64, 64, vb).unwrap();
        assert!((pixel_cosine(&a, &b).unwrap() - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let zero = GrayImage::filled(8, 8, 0.0).unwrap();
        assert_eq!(pixel_cosine(&zero, &a).unwrap(), 0.0);
    }

    #[test]
    fn pixel_cosine_identical_tile_scores_one() {
        let img = gray_image(40, 40, |x, y| ((x * y) % 13) as f32 / 12.0);
        let q = QueryObject::image("q", img.clone());
        let s = score_tile(&q, &img, &ScorerConfig::new(Backend::PixelCosine), None).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incompatible_queries_rejected() {
        let text = QueryObject::text("t", "a coin");
        let img = gray_image(32, 32, |_, _| 0.5);
        for backend in [
            Backend::Sift,
            Backend::Orb,
            Backend::PixelCosine,
            Backend::EmbedImageQuery,
        ] {
            let mut cfg = ScorerConfig::new(backend);
            if backend.is_embedding() {
                cfg.model_id = Some("mock".into());
            }
            let provider: Arc<dyn EmbeddingProvider> = Arc::new(MockEmbedder::new(16, 1));
            let err = score_tile(&text, &img, &cfg, Some(provider)).unwrap_err();
            assert!(
                matches!(err, Error::IncompatibleQuery { query: "text", .. }),
                "{err:?}"
            );
        }
        let q = QueryObject::image("q", img.clone());
        let cfg = ScorerConfig::embedding(Backend::EmbedTextQuery, "mock");
        assert!(matches!(
            score_tile(&q, &img, &cfg, None),
            Err(Error::IncompatibleQuery { query: "image", .. })
        ));
    }

    #[test]
    fn model_id_iff_embedding() {
        assert!(ScorerConfig::new(Backend::EmbedTextQuery)
            .validate()
            .is_err());
        assert!(ScorerConfig::embedding(Backend::EmbedTextQuery, "ViT-B-32")
            .validate()
            .is_ok());
        let mut cfg = ScorerConfig::new(Backend::Sift);
        assert!(cfg.validate().is_ok());
        cfg.model_id = Some("x".into());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn embedding_backend_bounded() {
        let provider: Arc<dyn EmbeddingProvider> = Arc::new(MockEmbedder::new(32, 7));
        let q = QueryObject::text("t", "horseman with spear");
        let cfg = ScorerConfig::embedding(Backend::EmbedTextQuery, "mock");
        let img = gray_image(24, 24, |x, y| ((x ^ y) & 1) as f32);
        let s = score_tile(&q, &img, &cfg, Some(provider)).unwrap();
        assert!((-1.0..=1.0).contains(&s));
    }

    fn vec_strategy() -> impl Strategy<Value = (Vec<f32>, Vec<f32>)> {
        (1usize..64).prop_flat_map(|n| {
            (
                proptest::collection::vec(-1.0f32..1.0, n),
                proptest::collection::vec(-1.0f32..1.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn cosine_symmetric_bounded_scale_invariant((a, b) in vec_strategy(), c in 0.01f32..50.0) {
            let ab = cosine(&a, &b);
            prop_assert_eq!(ab, cosine(&b, &a));
            prop_assert!(ab.abs() <= 1.0);
            let scaled: Vec<f32> = b.iter().map(|v| v * c).collect();
            prop_assert!((cosine(&a, &scaled) - ab).abs() < 1e-5);
        }

        #[test]
        fn max_is_permutation_invariant(scores in proptest::collection::vec(-5.0f64..5.0, 1..20), seed: u64) {
            let tiles: Vec<Tile> = (0..scores.len()).map(|i| Tile::new(i, 0, 1, 1)).collect();
            let base = aggregate("x", &tiles, &scores, Aggregation::Max, false).unwrap();
            let mut idx: Vec<usize> = (0..scores.len()).collect();
            let mut s = seed;
            for i in (1..idx.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (s >> 33) as usize % (i + 1));
            }
            let t2: Vec<Tile> = idx.iter().map(|&i| tiles[i]).collect();
            let s2: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            let other = aggregate("x", &t2, &s2, Aggregation::Max, false).unwrap();
            prop_assert_eq!(base.similarity, other.similarity);
        }
    }
}
