//! Model bundle directory: `model.json`, two ONNX graphs, tokenizer assets and
//! parity fixtures.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use motifscan_core::embed::parse_merges;
use motifscan_core::{PreprocessConfig, TokenizerAssets};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizerFiles {
    pub vocab: String,
    pub merges: String,
    pub context_length: usize,
    pub sot_id: u32,
    pub eot_id: u32,
}

/// Contents of `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub model_id: String,
    #[serde(default)]
    pub checkpoint: Option<String>,
    pub embed_dim: usize,
    pub image_encoder: String,
    pub text_encoder: String,
    pub preprocess: PreprocessConfig,
    pub tokenizer: TokenizerFiles,
}

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub dir: PathBuf,
    pub manifest: ModelManifest,
    pub tokenizer: TokenizerAssets,
}

impl ModelBundle {
    pub fn load(dir: &Path) -> Result<Self> {
        let bad = |message: String| AppError::Bundle {
            path: dir.to_path_buf(),
            message,
        };
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name)).map_err(|e| bad(format!("{name}: {e}")))
        };
        let text = read("model.json")?;
        let manifest: ModelManifest =
            serde_json::from_str(&text).map_err(|e| bad(format!("model.json: {e}")))?;
        if manifest.embed_dim == 0 {
            return Err(bad("embed_dim must be positive".into()));
        }
        manifest
            .preprocess
            .validate()
            .map_err(|e| bad(e.to_string()))?;

        let t = &manifest.tokenizer;
        let vocab_text = read(&t.vocab)?;
        let vocab: BTreeMap<String, u32> =
            serde_json::from_str(&vocab_text).map_err(|e| bad(format!("{}: {e}", t.vocab)))?;
        let merges_text = read(&t.merges)?;
        let merges = parse_merges(&merges_text).map_err(|e| bad(e.to_string()))?;
        let tokenizer = TokenizerAssets::new(merges, vocab, t.context_length, t.sot_id, t.eot_id)
            .map_err(|e| bad(e.to_string()))?;

        for graph in [&manifest.image_encoder, &manifest.text_encoder] {
            if !dir.join(graph).is_file() {
                return Err(bad(format!("missing graph file {graph}")));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            tokenizer,
        })
    }

    pub fn image_graph(&self) -> PathBuf {
        self.dir.join(&self.manifest.image_encoder)
    }

    pub fn text_graph(&self) -> PathBuf {
        self.dir.join(&self.manifest.text_encoder)
    }

    pub fn reference_vectors_path(&self) -> PathBuf {
        self.dir.join("reference_vectors.json")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceImage {
    pub name: String,
    /// Relative to the bundle directory.
    pub file: String,
    /// Flattened `3 x R x R` encoder input produced by the reference stack.
    #[serde(default)]
    pub pixel_values: Option<Vec<f32>>,
    pub embedding: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceText {
    pub text: String,
    pub tokens: Vec<u32>,
    pub embedding: Vec<f32>,
}

/// `reference_vectors.json`: fixture inputs with their expected outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceVectors {
    pub model_id: String,
    pub images: Vec<ReferenceImage>,
    pub texts: Vec<ReferenceText>,
}

impl ReferenceVectors {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| AppError::json(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/bundle")
    }

    #[test]
    fn loads_fixture_bundle() {
        let b = ModelBundle::load(&fixture_dir()).unwrap();
        assert_eq!(b.manifest.embed_dim, 32);
        assert_eq!(b.tokenizer.context_length(), 77);
        let refs = ReferenceVectors::load(&b.reference_vectors_path()).unwrap();
        assert_eq!(refs.images.len() + refs.texts.len(), 10);
        for e in refs
            .images
            .iter()
            .map(|i| &i.embedding)
            .chain(refs.texts.iter().map(|t| &t.embedding))
        {
            let norm: f64 = e.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn broken_bundles_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(ModelBundle::load(dir.path()).is_err());
        for f in [
            "model.json",
            "vocab.json",
            "merges.txt",
            "image_encoder.onnx",
        ] {
            std::fs::copy(fixture_dir().join(f), dir.path().join(f)).unwrap();
        }
        let err = ModelBundle::load(dir.path()).unwrap_err();
        assert!(err.to_string().contains("text_encoder.onnx"), "{err}");
        assert_eq!(err.exit_code() as i32, 2);
    }
}
