use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("buffer length {actual} does not match {width}x{height} (expected {expected})")]
    BufferLength {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("tile {x},{y} {w}x{h} lies outside a {width}x{height} image")]
    TileOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid tile spec: {0}")]
    InvalidTileSpec(String),
    #[error("tile list is empty")]
    EmptyTiles,
    #[error("{query} query is not supported by the {backend} backend")]
    IncompatibleQuery {
        query: &'static str,
        backend: &'static str,
    },
    #[error("invalid scorer config: {0}")]
    InvalidScorer(String),
    #[error("non-finite score for tile {0}")]
    NonFiniteScore(usize),
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedding has zero norm")]
    ZeroNorm,
    #[error("embedding backend failed: {0}")]
    Backend(String),
    #[error("invalid tokenizer assets: {0}")]
    Tokenizer(String),
    #[error("invalid preprocess config: {0}")]
    Preprocess(String),
    #[error("reference set is empty")]
    EmptyReferences,
    #[error("decoy pool is empty")]
    EmptyDecoys,
    #[error("decoy {0:?} equals the live query")]
    DecoyIsQuery(String),
    #[error("null distribution is empty")]
    EmptyNull,
    #[error("null distribution contains a non-finite sample")]
    NonFiniteNull,
    #[error("image {0:?} has no ground-truth label")]
    Unlabeled(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("threshold {0} is outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("duplicate image id {0:?}")]
    DuplicateId(String),
    #[error("manifest has no target entries")]
    NoTargets,
}
