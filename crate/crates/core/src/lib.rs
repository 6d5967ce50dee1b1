//! Physical-layer entropy analysis for delay PUFs.
//!
//! The pipeline: a structural design of timed paths ([`fabric`]), simulated
//! delay measurements with injected ground truth ([`simulator`]),
//! chip-to-chip compensation ([`compensation`]), per-path statistics
//! ([`pathstats`]), same-polarity path pairing with distinct-component
//! classification ([`pairing`]), per-component variance decomposition
//! ([`decomposition`]), and bitstring generation with quality metrics
//! ([`bitgen`]).

pub mod bitgen;
pub mod compensation;
pub mod decomposition;
pub mod error;
pub mod fabric;
pub mod matrix;
pub mod pairing;
pub mod pathstats;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
