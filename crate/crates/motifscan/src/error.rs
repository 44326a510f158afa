use std::path::PathBuf;

use motifscan_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, AppError>;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Usage = 1,
    Backend = 2,
    Corpus = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("model bundle {path}: {message}")]
    Bundle { path: PathBuf, message: String },
    #[error("inference: {0}")]
    Inference(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        AppError::Json {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            AppError::Usage(_) | AppError::Config(_) | AppError::Json { .. } => ExitCode::Usage,
            AppError::Io { .. } => ExitCode::Usage,
            AppError::Manifest { .. } | AppError::Image { .. } => ExitCode::Corpus,
            AppError::Bundle { .. } | AppError::Inference(_) => ExitCode::Backend,
            AppError::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &CoreError) -> ExitCode {
    use CoreError::*;
    match e {
        Backend(_)
        | Tokenizer(_)
        | Preprocess(_)
        | DimensionMismatch { .. }
        | ZeroNorm
        | NonFiniteScore(_)
        | EmptyNull
        | NonFiniteNull
        | TileOutOfBounds { .. } => ExitCode::Backend,
        NoTargets
        | DuplicateId(_)
        | EmptyReferences
        | Unlabeled(_)
        | InvalidDimensions { .. }
        | BufferLength { .. } => ExitCode::Corpus,
        InvalidTileSpec(_)
        | EmptyTiles
        | IncompatibleQuery { .. }
        | InvalidScorer(_)
        | EmptyDecoys
        | DecoyIsQuery(_)
        | InvalidK
        | InvalidThreshold(_) => ExitCode::Usage,
    }
}
