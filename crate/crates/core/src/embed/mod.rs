//! Shared-space image/text embeddings and the backend that scores tiles by
//! embedding cosine.
//!
//! The actual encoders run elsewhere (the `motifscan` crate drives exported
//! inference graphs); this module owns everything around them: input
//! preprocessing, tokenization, normalization, and a deterministic mock
//! provider for tests.

mod mock;
mod preprocess;
mod tokenizer;

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dataset::{QueryObject, QueryPayload};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scoring::TileScorer;

pub use mock::MockEmbedder;
pub use preprocess::{preprocess_image, Interpolation, PreprocessConfig, ResizeMode};
pub use tokenizer::{bytes_to_unicode, parse_merges, TokenizerAssets};

/// Tiles per encoder invocation unless configured otherwise.
pub const DEFAULT_BATCH_SIZE: usize = 16;

/// A unit-norm embedding vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Embedding {
    values: Vec<f32>,
}

impl Embedding {
    /// L2-normalizes raw encoder output.
    pub fn normalized(raw: &[f32]) -> Result<Self> {
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::Backend("encoder produced a non-finite value".into()));
        }
        let norm = libm::sqrt(raw.iter().map(|&v| v as f64 * v as f64).sum::<f64>());
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            values: raw.iter().map(|&v| (v as f64 / norm) as f32).collect(),
        })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|&v| v as f64 * v as f64).sum())
    }
}

/// Dot product of two unit embeddings, clamped to `[-1, 1]`.
pub fn embedding_cosine(a: &Embedding, b: &Embedding) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let dot: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| x as f64 * y as f64)
        .sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Something that maps images and texts into one embedding space.
pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    fn embed_dim(&self) -> usize;

    /// Embeds a batch of images; output order matches input order.
    fn embed_images(&self, images: &[Image]) -> Result<Vec<Embedding>>;

    fn embed_text(&self, text: &str) -> Result<Embedding>;

    fn embed_image(&self, image: &Image) -> Result<Embedding> {
        let mut out = self.embed_images(core::slice::from_ref(image))?;
        out.pop()
            .ok_or_else(|| Error::Backend("encoder returned no output".into()))
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn embed_dim(&self) -> usize {
        (**self).embed_dim()
    }

    fn embed_images(&self, images: &[Image]) -> Result<Vec<Embedding>> {
        (**self).embed_images(images)
    }

    fn embed_text(&self, text: &str) -> Result<Embedding> {
        (**self).embed_text(text)
    }
}

/// Scores tiles by cosine against a fixed query embedding.
pub struct EmbeddingScorer {
    provider: Arc<dyn EmbeddingProvider>,
    query: Embedding,
    batch_size: usize,
}

impl EmbeddingScorer {
    pub fn new(
        provider: Arc<dyn EmbeddingProvider>,
        query: &QueryObject,
        batch_size: usize,
    ) -> Result<Self> {
        let query = match &query.payload {
            QueryPayload::Image(img) => provider.embed_image(img)?,
            QueryPayload::Text(text) => provider.embed_text(text)?,
        };
        Self::from_embedding(provider, query, batch_size)
    }

    pub fn from_embedding(
        provider: Arc<dyn EmbeddingProvider>,
        query: Embedding,
        batch_size: usize,
    ) -> Result<Self> {
        if query.dim() != provider.embed_dim() {
            return Err(Error::DimensionMismatch {
                left: query.dim(),
                right: provider.embed_dim(),
            });
        }
        Ok(Self {
            provider,
            query,
            batch_size: batch_size.max(1),
        })
    }

    pub fn query(&self) -> &Embedding {
        &self.query
    }
}

impl TileScorer for EmbeddingScorer {
    fn score_tile(&self, tile: &Image) -> Result<f64> {
        embedding_cosine(&self.query, &self.provider.embed_image(tile)?)
    }

    fn score_tiles(&self, tiles: &[Image]) -> Result<Vec<f64>> {
        let mut scores = Vec::with_capacity(tiles.len());
        for chunk in tiles.chunks(self.batch_size) {
            let embs = self.provider.embed_images(chunk)?;
            if embs.len() != chunk.len() {
                return Err(Error::Backend(alloc::format!(
                    "encoder returned {} embeddings for {} images",
                    embs.len(),
                    chunk.len()
                )));
            }
            for e in &embs {
                scores.push(embedding_cosine(&self.query, e)?);
            }
        }
        Ok(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::GrayImage;

    #[test]
    fn cosine_basics() {
        let a = Embedding::normalized(&[3.0, 4.0]).unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-6);
        assert!((embedding_cosine(&a, &a).unwrap() - 1.0).abs() < 1e-6);
        let x = Embedding::normalized(&[1.0, 0.0]).unwrap();
        let y = Embedding::normalized(&[0.0, 2.0]).unwrap();
        assert_eq!(embedding_cosine(&x, &y).unwrap(), 0.0);
        let z = Embedding::normalized(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            embedding_cosine(&x, &z),
            Err(Error::DimensionMismatch { left: 2, right: 3 })
        );
        assert_eq!(Embedding::normalized(&[0.0, 0.0]), Err(Error::ZeroNorm));
        assert!(Embedding::normalized(&[f32::NAN]).is_err());
    }

    #[test]
    fn scores_independent_of_batch_size() {
        let provider: Arc<dyn EmbeddingProvider> = Arc::new(MockEmbedder::new(48, 3));
        let q = QueryObject::text("q", "two headed eagle");
        let tiles: Vec<Image> = (0..37)
            .map(|i| {
                Image::from_gray(
                    &GrayImage::from_fn(12 + i % 5, 12, |x, y| {
                        ((x * (i + 1) + y) % 9) as f32 / 8.0
                    })
                    .unwrap(),
                )
            })
            .collect();
        let reference = EmbeddingScorer::new(provider.clone(), &q, 1)
            .unwrap()
            .score_tiles(&tiles)
            .unwrap();
        for batch in [2, 16, 64] {
            let s = EmbeddingScorer::new(provider.clone(), &q, batch)
                .unwrap()
                .score_tiles(&tiles)
                .unwrap();
            for (a, b) in s.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }
}
