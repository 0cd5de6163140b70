//! Modular local surrogate explainers for tabular black-box models.
//!
//! An explainer is assembled from an interpretable representation
//! ([`representation`]), a neighbourhood sampler ([`sampling`]) and an
//! explanation generator ([`explain`]), composed by an
//! [`config::ExplainerConfig`] and run by [`report::explain`].

pub mod blackbox;
pub mod canonical;
pub mod config;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod explain;
pub mod global;
pub mod pipeline;
pub mod report;
pub mod representation;
pub mod sampling;
pub mod tree;

pub use error::{Error, Result};
