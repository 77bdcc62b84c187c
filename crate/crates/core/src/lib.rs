//! Diacritic restoration for Maghrebi Arabic dialects.
//!
//! Three diacritizers share one text model ([`script`]): a most-frequent-form
//! [`lookup`], a character-level linear-chain [`crf`] with n-gram and Brown
//! cluster features, and a character-level BiLSTM-CRF ([`neural`]). The
//! [`corpus`] module handles ingestion, fold splitting and corpus statistics;
//! [`eval`] scores predictions and runs uni-, cross- and joint-dialect
//! experiments.

pub mod corpus;
pub mod crf;
pub mod eval;
pub mod lattice;
pub mod lookup;
pub mod neural;
pub mod script;
pub mod seed;
