//! Command-line and HTTP front ends over `surrogate-core`.
//!
//! The CLI and the service both go through [`ops`], so a report produced by
//! either one is byte-for-byte the same for the same inputs.

pub mod cli;
pub mod failure;
pub mod inputs;
pub mod ops;
pub mod server;
pub mod tables;

pub use failure::Failure;
