//! Character-level linear-chain CRF trained on isolated words.
//!
//! Features are character n-gram windows around each position plus optional
//! Brown-cluster path prefixes of the containing word. Training maximizes
//! L2-regularized conditional log-likelihood with L-BFGS.

pub mod brown;
pub mod features;
mod lbfgs;
mod model;
mod train;

use std::path::PathBuf;

use thiserror::Error;

use crate::script::ScriptError;

pub use brown::{brown_cluster, BrownClustering};
pub use features::{extract_features, feature_ids, FeatureIndex};
pub use lbfgs::{minimize, LbfgsOutcome, LbfgsSettings, StopReason};
pub use model::{crf_decode, crf_log_partition, CrfModel, WordMarginals};
pub use train::{crf_train, CrfConfig, CrfTrainReport};

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("position {position} outside word of length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("vocabulary of {vocab} types is smaller than k = {k}")]
    VocabTooSmall { vocab: usize, k: usize },
    #[error("cluster count must be at least 2, got {0}")]
    InvalidClusterCount(usize),
    #[error("empty character sequence")]
    EmptySequence,
    #[error("empty training set")]
    EmptyInput,
    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error("word {word:?} carries a tag outside the tag set")]
    UnknownTag { word: String },
    #[error("input contains diacritic at position {position}")]
    DiacriticsInQuery { position: usize },
    #[error("invalid model file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Script(#[from] ScriptError),
}

impl From<crate::lookup::LookupError> for CrfError {
    fn from(e: crate::lookup::LookupError) -> Self {
        match e {
            crate::lookup::LookupError::DiacriticsInQuery { position } => {
                CrfError::DiacriticsInQuery { position }
            }
            crate::lookup::LookupError::EmptyInput => CrfError::EmptySequence,
            other => CrfError::Format(other.to_string()),
        }
    }
}
