//! Numerical laboratory for non-uniformly expanding interval maps and
//! partially hyperbolic skew-products of Viana type.
//!
//! The crate computes the constructive objects behind the existence of
//! absolutely continuous invariant measures: monotone branches and their
//! image sizes, expansion statistics, Pliss and hyperbolic-like times,
//! averaged push-forward measures, and induced Markov maps.

// Comparisons are written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acim;
pub mod branch;
pub mod config;
pub mod dd;
pub mod error;
pub mod expansion;
pub mod hyptimes;
pub mod maps;
pub mod markov;
pub mod rng;
pub mod runner;

pub use error::{Error, Result};
