//! Character-level BiLSTM-CRF tagger.
//!
//! Characters are embedded, passed through stacked bidirectional LSTM
//! layers, projected to per-tag emission scores and decoded by a CRF layer
//! with start and stop transitions. Gradients are computed by a hand-written
//! reverse pass; [`grad_check_with`] verifies them numerically.

mod config;
mod gradcheck;
mod lstm;
mod network;
pub mod params;
mod train;

use std::path::PathBuf;

use thiserror::Error;

use crate::script::ScriptError;

pub use config::NeuralConfig;
pub use gradcheck::{grad_check, grad_check_with, numeric_gradient, relative_error, GradCheckOptions, GradCheckReport};
pub use network::{init_model, sequence_nll, Mode, NeuralModel};
pub use params::CharVocab;
pub use train::{train, EpochRecord, TrainHistory};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty character sequence")]
    EmptySequence,
    #[error("empty training or validation set")]
    EmptyInput,
    #[error("{emissions} emission rows for {gold} gold tags")]
    LengthMismatch { emissions: usize, gold: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch} (consider clip_norm = 5.0)")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("input contains diacritic at position {position}")]
    DiacriticsInQuery { position: usize },
    #[error("token {index}: {source}")]
    Token {
        index: usize,
        #[source]
        source: Box<NeuralError>,
    },
    #[error("word {word:?} carries a tag outside the tag set")]
    UnknownTag { word: String },
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

impl From<crate::lookup::LookupError> for NeuralError {
    fn from(e: crate::lookup::LookupError) -> Self {
        match e {
            crate::lookup::LookupError::DiacriticsInQuery { position } => {
                NeuralError::DiacriticsInQuery { position }
            }
            crate::lookup::LookupError::EmptyInput => NeuralError::EmptySequence,
            other => NeuralError::Format(other.to_string()),
        }
    }
}
