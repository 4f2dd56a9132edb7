//! Few-shot named entity recognition by matching token representations
//! against encoded natural-language label names.
//!
//! The crate is organized bottom-up:
//!
//! - [`numeric`]: matrices, a gradient tape, contextualizers, Adam.
//! - [`corpus`]: BIO corpora, label taxonomies, span extraction, renaming.
//! - [`sampler`]: K-shot support-set construction and verification.
//! - [`encoders`]: vocabulary, token and label encoders, static vectors.
//! - [`matcher`]: the dual-encoder model, training, caching, checkpoints.
//! - [`eval`]: entity-level micro F1 and multi-run aggregation.
//! - [`synthetic`]: generated word-family corpora for desk-scale experiments.

pub mod corpus;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod matcher;
pub mod numeric;
pub mod sampler;
pub mod synthetic;

pub use error::{Error, Result};
