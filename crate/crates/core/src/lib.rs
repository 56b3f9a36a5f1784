//! Critical Erdős–Rényi graphs through their depth-first codes.
//!
//! The discrete side ([`graph`], [`exploration`], [`encoding`], [`samplers`])
//! builds graphs, explores them in depth-first order and maps connected graphs
//! to marked walks and back. The continuum side ([`continuum`], [`metric`])
//! samples tilted excursions, reflected parabolic Brownian motion and glued
//! real trees. [`harness`] runs the Monte Carlo experiments.
//!
//! Vertices are stored as 0-based indices; vertex `v` carries label `v + 1`,
//! so label order and index order coincide.

pub mod continuum;
pub mod encoding;
pub mod enumerate;
pub mod error;
pub mod exploration;
pub mod graph;
pub mod harness;
pub mod metric;
pub mod rng;
pub mod samplers;
pub mod stats;

pub use error::{Error, Result};
pub use rng::RngStream;
