//! Semi-supervised scientific text classification.
//!
//! The crate fine-tunes pluggable classifier backends on a labeled corpus,
//! labels retrieved documents by hard voting across several models, merges
//! the accepted documents back into the corpus, retrains, and reports
//! micro-averaged metrics together with per-domain agreement tables.
//!
//! Modules follow the workflow:
//!
//! - [`corpus`]: loading, deduplication, seeded splits, merging
//! - [`preprocess`]: cleaning, per-scenario input text, fixed-length encoding
//! - [`backend`]: the classifier contract and the lightweight reference model
//! - [`training`]: schedule, early stopping, learning-rate grid search
//! - [`ensemble`]: top-k inference, hard voting, agreement statistics
//! - [`evaluation`]: confusion matrices, micro metrics, comparison tables
//! - [`pipeline`]: staged commands over a run directory
//! - [`synthetic`]: a reproducible desk-scale corpus

pub mod backend;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod jsonl;
pub mod pipeline;
pub mod preprocess;
pub mod synthetic;
pub mod tokenizer;
pub mod training;

pub use error::{Error, Result};
