//! File formats, model runtime and command line around `motifscan-core`.

pub mod bundle;
pub mod cli;
pub mod config;

pub mod corpus;
pub mod error;
pub mod onnx;
pub mod output;
pub mod pipeline;

pub use error::{AppError, ExitCode, Result};
