//! Scoring, calibration and evaluation over a loaded corpus.

use std::collections::BTreeMap;
use std::sync::Arc;

use log::{info, warn};
use motifscan_core::calibration::null_from_reference_scores;
use motifscan_core::eval::{evaluate, rank_images};
use motifscan_core::keypoint::{extract, Keypoint, KeypointParams};
use motifscan_core::scoring::{build_scorer, score_image, ParamValue};
use motifscan_core::tiling::generate_tiles;
use motifscan_core::{
    build_null_m2, p_value, Backend, DecoyPool, EmbeddingProvider, Error as CoreError, ImageRecord,
    Label, Mechanism, MetricsReport, MockEmbedder, NullDistribution, PValueResult, QueryObject,
    RankedList, ScoredImage, ScorerConfig, TileScorer,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::bundle::ModelBundle;
use crate::config::{DecoyFile, QuerySpec, RunConfig, ScorerSpec};
use crate::corpus::{load_corpus, load_image, Corpus};
use crate::error::{AppError, Result};
use crate::onnx::OnnxEmbedder;

pub fn load_query(spec: &QuerySpec) -> Result<QueryObject> {
    match (&spec.text, &spec.image) {
        (Some(text), None) => Ok(QueryObject::text(spec.name.clone(), text.clone())),
        (None, Some(path)) => Ok(QueryObject::image(spec.name.clone(), load_image(path)?)),
        _ => Err(AppError::Config(format!(
            "query {:?} needs exactly one of text or image",
            spec.name
        ))),
    }
}

/// A scorer spec with its encoder loaded.
pub struct PreparedScorer {
    pub config: ScorerConfig,
    pub provider: Option<Arc<dyn EmbeddingProvider>>,
}

pub fn prepare_scorer(spec: &ScorerSpec, batch_size: usize) -> Result<PreparedScorer> {
    let provider: Option<Arc<dyn EmbeddingProvider>> = match (&spec.bundle, &spec.mock) {
        (Some(dir), _) => Some(Arc::new(OnnxEmbedder::load(
            ModelBundle::load(dir)?,
            batch_size,
        )?)),
        (None, Some(m)) => Some(Arc::new(MockEmbedder::new(m.dim, m.seed))),
        (None, None) => None,
    };
    let mut config = ScorerConfig::new(spec.backend);
    config.params = spec.params.clone();
    if let Some(p) = &provider {
        config.model_id = Some(
            spec.model_id
                .clone()
                .unwrap_or_else(|| p.model_id().to_string()),
        );
        config
            .params
            .entry("batch_size".into())
            .or_insert(ParamValue::Number(batch_size as f64));
    }
    config.validate()?;
    Ok(PreparedScorer { config, provider })
}

/// Null distributions for one mechanism: shared by all targets, or one per
/// target (mechanism 2, in ranked order).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Nulls {
    Shared(NullDistribution),
    PerTarget(Vec<NullDistribution>),
}

impl Nulls {
    pub fn iter(&self) -> impl Iterator<Item = &NullDistribution> {
        match self {
            Nulls::Shared(n) => std::slice::from_ref(n).iter(),
            Nulls::PerTarget(v) => v.iter(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Calibrated {
    pub mechanism: Mechanism,
    pub nulls: Nulls,
    /// Aligned with the ranked target list.
    pub pvalues: Vec<PValueResult>,
}

#[derive(Debug, Clone)]
pub struct ScorerRun {
    pub config: ScorerConfig,
    pub ranked: RankedList,
    /// Reference scores in manifest order; empty if the corpus has none.
    pub references: Vec<ScoredImage>,
    pub calibrations: Vec<Calibrated>,
}

impl ScorerRun {
    pub fn calibration(&self, mechanism: Mechanism) -> Option<&Calibrated> {
        self.calibrations.iter().find(|c| c.mechanism == mechanism)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeypointRecord {
    pub x: f32,
    pub y: f32,
    pub scale: f32,
    pub orientation: f32,
    pub response: f32,
}

impl From<&Keypoint> for KeypointRecord {
    fn from(k: &Keypoint) -> Self {
        Self {
            x: k.x,
            y: k.y,
            scale: k.scale,
            orientation: k.orientation,
            response: k.response,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeypointImage {
    pub name: String,
    pub keypoints: Vec<KeypointRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeypointDump {
    pub backend: Backend,
    pub images: Vec<KeypointImage>,
}

/// A validated config with its corpus and query loaded and a worker pool
/// sized by `threads`.
pub struct Session {
    pub config: RunConfig,
    pub corpus: Corpus,
    pub query: QueryObject,
    pool: rayon::ThreadPool,
}

impl Session {
    pub fn open(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| AppError::Config(format!("thread pool: {e}")))?;
        let corpus = pool.install(|| load_corpus(&config.manifest))?;
        let query = load_query(&config.query)?;
        info!(
            "{} targets, {} references, query {:?} ({})",
            corpus.targets.len(),
            corpus.references.len(),
            query.name,
            query.kind().as_str()
        );
        Ok(Self {
            config,
            corpus,
            query,
            pool,
        })
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    fn score_all(
        &self,
        scorer: &dyn TileScorer,
        records: &[ImageRecord],
        keep_tiles: bool,
    ) -> Result<Vec<ScoredImage>> {
        let spec = &self.config.tiles;
        let agg = self.config.aggregation;
        records
            .par_iter()
            .map(|r| {
                let tiles = generate_tiles(r.width(), r.height(), spec)?;
                Ok(score_image(
                    scorer, &r.id, &r.image, &tiles, agg, keep_tiles,
                )?)
            })
            .collect()
    }

    fn decoy_pool(&self) -> Result<DecoyPool> {
        let path = self
            .config
            .calibration
            .decoys
            .as_ref()
            .ok_or_else(|| AppError::Config("mechanism 2 needs a decoys file".into()))?;
        let decoys = DecoyFile::load(path)?
            .decoys
            .iter()
            .map(load_query)
            .collect::<Result<Vec<_>>>()?;
        Ok(DecoyPool::new(decoys, &self.query)?)
    }

    /// Scores targets and references with one scorer and builds a null for
    /// each mechanism.
    pub fn run_scorer(&self, spec: &ScorerSpec, mechanisms: &[Mechanism]) -> Result<ScorerRun> {
        let prepared = prepare_scorer(spec, self.config.batch_size)?;
        self.install(|| self.run_prepared(&prepared, mechanisms))
    }

    fn run_prepared(
        &self,
        prepared: &PreparedScorer,
        mechanisms: &[Mechanism],
    ) -> Result<ScorerRun> {
        let scorer = build_scorer(&prepared.config, &self.query, prepared.provider.clone())?;
        let name = format!(
            "{} {}",
            prepared.config.backend,
            prepared.config.model_name()
        );
        let ranked = rank_images(self.score_all(scorer.as_ref(), &self.corpus.targets, false)?);
        let keep_tiles = mechanisms.contains(&Mechanism::ReferenceTiles);
        let references = self.score_all(scorer.as_ref(), &self.corpus.references, keep_tiles)?;

        let mut calibrations = Vec::with_capacity(mechanisms.len());
        for &mechanism in mechanisms {
            let nulls = match mechanism {
                Mechanism::ReferenceImages | Mechanism::ReferenceTiles => Nulls::Shared(
                    null_from_reference_scores(mechanism, &self.query.name, &references)?,
                ),
                Mechanism::DecoyQueries => Nulls::PerTarget(self.decoy_nulls(prepared, &ranked)?),
            };
            if let Some(n) = nulls.iter().find(|n| n.is_undersized()) {
                warn!(
                    "{name}, mechanism {mechanism}: null has {} samples; p-values cannot fall below {:.4}",
                    n.len(),
                    1.0 / (n.len() + 1) as f64
                );
            }
            let pvalues = ranked
                .items()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let null = match &nulls {
                        Nulls::Shared(n) => n,
                        Nulls::PerTarget(v) => &v[i],
                    };
                    p_value(&s.image_id, s.similarity, null)
                })
                .collect();
            calibrations.push(Calibrated {
                mechanism,
                nulls,
                pvalues,
            });
        }
        Ok(ScorerRun {
            config: prepared.config.clone(),
            ranked,
            references,
            calibrations,
        })
    }

    fn decoy_nulls(
        &self,
        prepared: &PreparedScorer,
        ranked: &RankedList,
    ) -> Result<Vec<NullDistribution>> {
        let pool = self.decoy_pool()?;
        let scorers = pool
            .decoys()
            .par_iter()
            .map(|d| build_scorer(&prepared.config, d, prepared.provider.clone()))
            .collect::<std::result::Result<Vec<_>, CoreError>>()?;
        let by_id: BTreeMap<&str, &ImageRecord> = self
            .corpus
            .targets
            .iter()
            .map(|r| (r.id.as_str(), r))
            .collect();
        ranked
            .items()
            .par_iter()
            .map(|s| {
                let target = by_id[s.image_id.as_str()];
                Ok(build_null_m2(
                    target,
                    &pool,
                    &scorers,
                    &self.config.tiles,
                    self.config.aggregation,
                )?)
            })
            .collect()
    }

    /// One metrics row per mechanism of a scorer run.
    pub fn evaluate(&self, run: &ScorerRun) -> Result<Vec<MetricsReport>> {
        let labels = self.corpus.labels();
        if labels.values().all(|l| *l == Label::Unknown) {
            return Err(AppError::Manifest {
                path: self.config.manifest.clone(),
                message: "evaluation needs positive/negative labels on targets".into(),
            });
        }
        run.calibrations
            .iter()
            .map(|c| {
                Ok(evaluate(
                    run.config.object_type(),
                    &run.config.model_name(),
                    c.mechanism,
                    &run.ranked,
                    &c.pvalues,
                    &labels,
                    &self.config.thresholds,
                    self.config.k,
                )?)
            })
            .collect()
    }

    /// Keypoints of the query and of every full target image.
    pub fn keypoints(&self, spec: &ScorerSpec) -> Result<Option<KeypointDump>> {
        if !matches!(spec.backend, Backend::Sift | Backend::Orb) {
            return Ok(None);
        }
        let config = prepare_scorer(spec, self.config.batch_size)?.config;
        let params = KeypointParams::from_config(&config)?;
        let query = self.query.as_image().ok_or(CoreError::IncompatibleQuery {
            query: "text",
            backend: spec.backend.as_str(),
        })?;
        let mut images = vec![(self.query.name.clone(), query.gray())];
        images.extend(
            self.corpus
                .targets
                .iter()
                .map(|r| (r.id.clone(), r.image.gray())),
        );
        let images = self.install(|| {
            images
                .par_iter()
                .map(|(name, gray)| {
                    let (kps, _) = extract(spec.backend, gray, &params)?;
                    Ok(KeypointImage {
                        name: name.clone(),
                        keypoints: kps.iter().map(KeypointRecord::from).collect(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(Some(KeypointDump {
            backend: spec.backend,
            images,
        }))
    }
}
