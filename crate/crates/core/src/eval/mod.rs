//! Scoring and the uni-, cross- and joint-dialect experiment harness.
//!
//! All outputs are error rates in percent.

mod experiment;
mod metrics;
mod output;

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::crf::{crf_decode, CrfError, CrfModel};
use crate::lookup::{lookup_diacritize, lookup_or_bare, LookupError, LookupTable};
use crate::neural::{NeuralError, NeuralModel};
use crate::script::{ScriptError, TaggedWord};

pub use experiment::{
    run_experiment, CellResult, ExperimentResults, ExperimentSpec, FoldResult, ModelKind, Regime,
};
pub use metrics::{
    confusion, diacritic_breakdown, score, top_errors, ConfusionMatrix, ErrorBreakdown, ErrorEntry,
    EvalReport, FoldedReport, BREAKDOWN_MARKS,
};
pub use output::write_results;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold and predicted words diverge at index {index}")]
    AlignmentMismatch { index: usize },
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("{cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<EvalError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Crf(#[from] CrfError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Lookup(#[from] LookupError),
    #[error(transparent)]
    Script(#[from] ScriptError),
}

impl EvalError {
    /// True for failures caused by non-finite values during training.
    pub fn is_numerical(&self) -> bool {
        match self {
            EvalError::Cell { source, .. } => source.is_numerical(),
            EvalError::Crf(CrfError::NonFiniteObjective { .. }) => true,
            EvalError::Neural(NeuralError::NonFiniteLoss { .. }) => true,
            _ => false,
        }
    }
}

/// Anything that restores diacritics for a batch of bare words.
pub trait Diacritizer: Sync {
    fn diacritize_many(&self, bases: &[&str]) -> Result<Vec<TaggedWord>, EvalError>;
}

impl Diacritizer for LookupTable {
    fn diacritize_many(&self, bases: &[&str]) -> Result<Vec<TaggedWord>, EvalError> {
        Ok(bases
            .iter()
            .map(|b| lookup_or_bare(b, self))
            .collect::<Result<_, _>>()?)
    }
}

impl Diacritizer for CrfModel {
    fn diacritize_many(&self, bases: &[&str]) -> Result<Vec<TaggedWord>, EvalError> {
        let mut unique: Vec<&str> = bases.to_vec();
        unique.sort_unstable();
        unique.dedup();
        let decoded: Vec<TaggedWord> = unique
            .par_iter()
            .map(|b| crf_decode(b, self))
            .collect::<Result<_, _>>()?;
        Ok(bases
            .iter()
            .map(|b| decoded[unique.binary_search(b).unwrap()].clone())
            .collect())
    }
}

impl Diacritizer for NeuralModel {
    fn diacritize_many(&self, bases: &[&str]) -> Result<Vec<TaggedWord>, EvalError> {
        Ok(self.decode_many(bases)?)
    }
}

/// Lookup for words seen in training, a model for everything else.
pub struct Hybrid<'a> {
    pub table: &'a LookupTable,
    pub fallback: &'a dyn Diacritizer,
}

impl Diacritizer for Hybrid<'_> {
    fn diacritize_many(&self, bases: &[&str]) -> Result<Vec<TaggedWord>, EvalError> {
        let mut out: Vec<Option<TaggedWord>> = bases
            .iter()
            .map(|b| lookup_diacritize(b, self.table))
            .collect::<Result<_, _>>()?;
        let misses: Vec<&str> = bases
            .iter()
            .zip(&out)
            .filter(|(_, o)| o.is_none())
            .map(|(b, _)| *b)
            .collect();
        let mut filled = self.fallback.diacritize_many(&misses)?.into_iter();
        for o in out.iter_mut().filter(|o| o.is_none()) {
            *o = filled.next();
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lookup::build_lookup;
    use crate::script::strip_word;

    struct Fixed;

    impl Diacritizer for Fixed {
        fn diacritize_many(&self, bases: &[&str]) -> Result<Vec<TaggedWord>, EvalError> {
            Ok(bases
                .iter()
                .map(|b| strip_word(&b.chars().flat_map(|c| [c, 'i']).collect::<String>()).unwrap())
                .collect())
        }
    }

    #[test]
    fn hybrid_routes_misses_to_fallback() {
        let train = [strip_word("kataba").unwrap()];
        let table = build_lookup(&train).unwrap();
        let h = Hybrid {
            table: &table,
            fallback: &Fixed,
        };
        let out = h.diacritize_many(&["ktb", "lm", "ktb"]).unwrap();
        let forms: Vec<String> = out.iter().map(TaggedWord::diacritized).collect();
        assert_eq!(forms, ["kataba", "limi", "kataba"]);
        let bare = table.diacritize_many(&["lm"]).unwrap();
        assert_eq!(bare[0].diacritized(), "lm");
    }
}
