//! Embedding collections of probability densities into Euclidean space.
//!
//! The pipeline: a parametric family ([`models`]) generates densities or
//! samples; a dissimilarity ([`metrics`], or [`estimators`] for samples)
//! produces a pairwise matrix; classical scaling ([`mds`]) or Isomap
//! ([`isomap`]) embeds it; [`geometry`] probes the local quadratic structure
//! and intrinsic metrics behind those embeddings.

// Validation guards are written `!(x > 0.0)` on purpose: the negation is
// true for NaN as well as for out-of-range values, so one predicate rejects
// both. `partial_cmp` spellings would lose that property or bloat the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod geometry;
pub mod io;
pub mod isomap;
pub mod mds;
pub mod metrics;
pub mod models;
pub mod quad;
pub mod rng;
pub mod suites;

pub use error::{Error, Result};
