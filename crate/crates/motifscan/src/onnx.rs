//! Runs exported encoder graphs with tract.

use std::path::Path;
use std::sync::Arc;

use log::debug;
use motifscan_core::embed::preprocess_image;
use motifscan_core::{Embedding, EmbeddingProvider, Error as CoreError, Image};
use tract_onnx::prelude::*;
use tract_onnx::tract_hir::infer::Factoid;

use crate::bundle::ModelBundle;
use crate::error::{AppError, Result};

type Plan = Arc<TypedSimplePlan>;

/// An image plan compiled for a fixed batch size.
struct ImagePlan {
    plan: Plan,
    batch: usize,
}

/// Embedding provider backed by a bundle's two ONNX graphs.
pub struct OnnxEmbedder {
    bundle: ModelBundle,
    image: ImagePlan,
    text: Plan,
    text_type: DatumType,
}

fn load_error(path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::Bundle {
        path: path.to_path_buf(),
        message: format!("{e:#}"),
    }
}

fn compile(path: &Path, fact: InferenceFact) -> TractResult<Plan> {
    tract_onnx::onnx()
        .model_for_path(path)?
        .with_input_fact(0, fact)?
        .into_optimized()?
        .into_runnable()
}

impl OnnxEmbedder {
    /// Compiles both graphs. The image graph is compiled for `batch_size`
    /// inputs per call, falling back to single inputs if the graph pins its
    /// batch dimension.
    pub fn load(bundle: ModelBundle, batch_size: usize) -> Result<Self> {
        let r = bundle.manifest.preprocess.resolution;
        let image_path = bundle.image_graph();
        let mut image = None;
        let mut last_err = None;
        for batch in [batch_size.max(1), 1] {
            match compile(&image_path, f32::fact([batch, 3, r, r]).into()) {
                Ok(plan) => {
                    image = Some(ImagePlan { plan, batch });
                    break;
                }
                Err(e) => {
                    debug!("image graph at batch {batch}: {e:#}");
                    last_err = Some(e);
                }
            }
        }
        let image =
            image.ok_or_else(|| load_error(&image_path, last_err.expect("tried at least once")))?;

        let text_path = bundle.text_graph();
        let ctx = bundle.tokenizer.context_length();
        let raw = tract_onnx::onnx()
            .model_for_path(&text_path)
            .map_err(|e| load_error(&text_path, e))?;
        let declared = raw
            .input_fact(0)
            .map_err(|e| load_error(&text_path, e))?
            .datum_type
            .concretize()
            .unwrap_or(DatumType::I64);
        let text_type = match declared {
            DatumType::I32 => DatumType::I32,
            _ => DatumType::I64,
        };
        let fact = InferenceFact::dt_shape(text_type, [1, ctx]);
        let text = raw
            .with_input_fact(0, fact)
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(|e| load_error(&text_path, e))?;

        let embedder = Self {
            bundle,
            image,
            text,
            text_type,
        };
        embedder.check_dims()?;
        Ok(embedder)
    }

    pub fn bundle(&self) -> &ModelBundle {
        &self.bundle
    }

    pub fn image_batch(&self) -> usize {
        self.image.batch
    }

    fn check_dims(&self) -> Result<()> {
        let probe = self
            .embed_text_raw("")
            .map_err(|e| AppError::Inference(e.to_string()))?;
        let dim = self.bundle.manifest.embed_dim;
        if probe.len() != dim {
            return Err(AppError::Bundle {
                path: self.bundle.dir.clone(),
                message: format!(
                    "text graph emits {} values, model.json says {dim}",
                    probe.len()
                ),
            });
        }
        Ok(())
    }

    /// Preprocessed encoder input for one image, `3 x R x R` planar.
    pub fn pixel_values(&self, image: &Image) -> motifscan_core::Result<Vec<f32>> {
        preprocess_image(image, &self.bundle.manifest.preprocess)
    }

    fn run_images(&self, pixels: &[Vec<f32>]) -> motifscan_core::Result<Vec<Vec<f32>>> {
        let r = self.bundle.manifest.preprocess.resolution;
        let per = 3 * r * r;
        let batch = self.image.batch;
        let mut out = Vec::with_capacity(pixels.len());
        for chunk in pixels.chunks(batch) {
            let mut flat = Vec::with_capacity(batch * per);
            for p in chunk {
                flat.extend_from_slice(p);
            }
            // pad a short final chunk by repeating its first input
            for _ in chunk.len()..batch {
                flat.extend_from_slice(&chunk[0]);
            }
            let input = tract_ndarray::Array4::from_shape_vec((batch, 3, r, r), flat)
                .map_err(|e| CoreError::Backend(e.to_string()))?;
            let result = self
                .image
                .plan
                .run(tvec!(Tensor::from(input).into()))
                .map_err(|e| CoreError::Backend(format!("{e:#}")))?;
            let view = result[0]
                .to_plain_array_view::<f32>()
                .map_err(|e| CoreError::Backend(format!("{e:#}")))?;
            let rows = view
                .into_shape_with_order((batch, self.bundle.manifest.embed_dim))
                .map_err(|e| CoreError::Backend(format!("image graph output: {e}")))?;
            out.extend(rows.outer_iter().take(chunk.len()).map(|row| row.to_vec()));
        }
        Ok(out)
    }

    fn embed_text_raw(&self, text: &str) -> motifscan_core::Result<Vec<f32>> {
        let ids = self.bundle.tokenizer.tokenize(text);
        let ctx = ids.len();
        let tensor = match self.text_type {
            DatumType::I32 => Tensor::from_shape(
                &[1, ctx],
                &ids.iter().map(|&v| v as i32).collect::<Vec<_>>(),
            ),
            _ => Tensor::from_shape(
                &[1, ctx],
                &ids.iter().map(|&v| v as i64).collect::<Vec<_>>(),
            ),
        }
        .map_err(|e| CoreError::Backend(format!("{e:#}")))?;
        let result = self
            .text
            .run(tvec!(tensor.into()))
            .map_err(|e| CoreError::Backend(format!("{e:#}")))?;
        let view = result[0]
            .to_plain_array_view::<f32>()
            .map_err(|e| CoreError::Backend(format!("{e:#}")))?;
        Ok(view.iter().copied().collect())
    }
}

impl EmbeddingProvider for OnnxEmbedder {
    fn model_id(&self) -> &str {
        &self.bundle.manifest.model_id
    }

    fn embed_dim(&self) -> usize {
        self.bundle.manifest.embed_dim
    }

    fn embed_images(&self, images: &[Image]) -> motifscan_core::Result<Vec<Embedding>> {
        if images.is_empty() {
            return Ok(Vec::new());
        }
        let pixels = images
            .iter()
            .map(|i| self.pixel_values(i))
            .collect::<motifscan_core::Result<Vec<_>>>()?;
        self.run_images(&pixels)?
            .iter()
            .map(|raw| self.normalize(raw))
            .collect()
    }

    fn embed_text(&self, text: &str) -> motifscan_core::Result<Embedding> {
        self.normalize(&self.embed_text_raw(text)?)
    }
}

impl OnnxEmbedder {
    fn normalize(&self, raw: &[f32]) -> motifscan_core::Result<Embedding> {
        let dim = self.bundle.manifest.embed_dim;
        if raw.len() != dim {
            return Err(CoreError::DimensionMismatch {
                left: raw.len(),
                right: dim,
            });
        }
        Embedding::normalized(raw)
    }

    /// Embeds already preprocessed encoder inputs.
    pub fn embed_pixel_values(
        &self,
        pixels: &[Vec<f32>],
    ) -> motifscan_core::Result<Vec<Embedding>> {
        self.run_images(pixels)?
            .iter()
            .map(|raw| self.normalize(raw))
            .collect()
    }
}
