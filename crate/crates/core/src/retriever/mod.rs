//! Dual-encoder API retrieval: hashed features, linear encoders, training,
//! a flat index and recall metrics.

mod encoder;
mod features;
mod index;
mod metrics;
mod train;

use std::fmt::Display;
use std::path::Path;

pub use encoder::{score, EncoderParams, Side, DEFAULT_EMBED_DIM, DEFAULT_HASH_DIM};
pub use features::{bucket, featurize, fnv1a, tokenize, SparseVec};
pub use index::{build_index, retrieve, ApiIndex, IndexEntry};
pub use metrics::{recall_at_k, retrieval_accuracy};
pub use train::{loss_and_gradient, train, train_from, Gradient, PreparedPairs, TrainConfig, TrainLog};

#[derive(Debug, thiserror::Error)]
pub enum RetrieverError {
    #[error("invalid encoder params: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("no training pairs")]
    NoPairs,
    #[error("non-finite loss {loss} at epoch {epoch}, pair {pair}")]
    NonFiniteLoss { epoch: usize, pair: usize, loss: f64 },
    #[error("api id {0:?} is not in the catalog")]
    UnknownApi(String),
    #[error("index is empty")]
    EmptyIndex,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("oracle api set is empty")]
    EmptyOracle,
    #[error("index was built with params {index}, but params {params} were given")]
    IndexMismatch { index: String, params: String },
    #[error("index file line {line}: {message}")]
    IndexFormat { line: usize, message: String },
}

impl RetrieverError {
    pub(crate) fn io(path: &Path, e: impl Display) -> Self {
        RetrieverError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
