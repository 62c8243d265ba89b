//! Flood-relevance classification of tweets by late fusion of per-model
//! posterior probabilities.
//!
//! The pipeline is: load a [`corpus`], clean text with [`normalize`], score
//! tweets with any model that writes the [`scores`] file format (the bundled
//! [`baseline`] naive Bayes model, or an external transformer), combine
//! models with [`fusion`], and evaluate ensembles with [`metrics`].
//! [`experiment`] wires these together into the run grid.

pub mod baseline;
pub mod corpus;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod fusion;
pub mod io;
pub mod metrics;
pub mod normalize;
pub mod scores;

pub use error::{Error, Result};
