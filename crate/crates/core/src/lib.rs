//! Allocation-only core of the motif scanner.
//!
//! Everything in this crate is pure computation over in-memory buffers:
//! grayscale conversion and resampling, tile generation, tile scoring
//! backends (pixel cosine, embedding cosine, SIFT and ORB match counts),
//! empirical p-value calibration, and search/classification metrics.
//! File formats, model runtimes, and the command line live in the
//! `motifscan` crate.
//!
//! The crate is `no_std` and needs only `alloc`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod calibration;
pub mod dataset;
pub mod embed;
mod error;
pub mod eval;
pub mod image;
pub mod keypoint;
pub mod report;
pub mod scoring;
pub mod synth;
pub mod tiling;

pub use calibration::{
    build_null_m1, build_null_m2, build_null_m3, p_value, DecoyPool, Mechanism, NullDistribution,
    NullSource, PValueResult,
};
pub use dataset::{ImageRecord, Label, Manifest, ManifestEntry, QueryKind, QueryObject, Role};
pub use embed::{Embedding, EmbeddingProvider, MockEmbedder, PreprocessConfig, TokenizerAssets};
pub use error::{Error, Result};
pub use eval::{ConfusionMatrix, Metrics, MetricsReport, RankedList};
pub use image::Image;
pub use scoring::{Aggregation, Backend, ScoredImage, ScorerConfig, TileScorer};
pub use tiling::{Tile, TileSpec};
