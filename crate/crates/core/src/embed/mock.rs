use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use super::{Embedding, EmbeddingProvider};
use crate::error::Result;
use crate::image::{resample_plane, Filter, Image};

/// Side of the per-channel thumbnail the mock projects.
const THUMB: usize = 8;
const FEATURES: usize = 3 * THUMB * THUMB;

/// Deterministic stand-in for a real encoder pair.
///
/// Images become an 8x8 RGB thumbnail, texts a bag of hashed words; both
/// feature vectors go through one fixed-seed random projection. Outputs are
/// bit-for-bit reproducible for a given `(dim, seed)`.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    model_id: String,
    dim: usize,
    projection: Vec<f32>,
}

impl MockEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // one extra column acts as a bias so no feature vector projects to zero
        let projection = (0..dim * (FEATURES + 1))
            .map(|_| (rng.next_u32() as f64 / u32::MAX as f64 * 2.0 - 1.0) as f32)
            .collect();
        Self {
            model_id: format!("mock-{dim}-{seed}"),
            dim,
            projection,
        }
    }

    fn project(&self, features: &[f32]) -> Result<Embedding> {
        debug_assert_eq!(features.len(), FEATURES);
        let mut out = vec![0.0f32; self.dim];
        for (row, o) in self
            .projection
            .chunks_exact(FEATURES + 1)
            .zip(out.iter_mut())
        {
            let dot: f64 = row[..FEATURES]
                .iter()
                .zip(features)
                .map(|(&w, &f)| w as f64 * f as f64)
                .sum();
            *o = (dot + row[FEATURES] as f64) as f32;
        }
        Embedding::normalized(&out)
    }

    fn image_features(image: &Image) -> Vec<f32> {
        let (w, h) = (image.width(), image.height());
        let mut features = Vec::with_capacity(FEATURES);
        for c in 0..3 {
            let plane: Vec<f32> = image
                .rgb()
                .iter()
                .skip(c)
                .step_by(3)
                .map(|&v| v as f32 / 255.0 - 0.5)
                .collect();
            features.extend(resample_plane(
                &plane,
                (w, h),
                (THUMB, THUMB),
                Filter::Triangle,
                false,
            ));
        }
        features
    }

    fn text_features(text: &str) -> Vec<f32> {
        let mut features = vec![0.0f32; FEATURES];
        for word in text.split_whitespace() {
            // FNV-1a over the lowercased word
            let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
            for b in word.bytes().map(|b| b.to_ascii_lowercase()) {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
            features[(hash % FEATURES as u64) as usize] += 1.0;
        }
        features
    }
}

impl EmbeddingProvider for MockEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed_dim(&self) -> usize {
        self.dim
    }

    fn embed_images(&self, images: &[Image]) -> Result<Vec<Embedding>> {
        images
            .iter()
            .map(|img| self.project(&Self::image_features(img)))
            .collect()
    }

    fn embed_text(&self, text: &str) -> Result<Embedding> {
        self.project(&Self::text_features(text))
    }
}
