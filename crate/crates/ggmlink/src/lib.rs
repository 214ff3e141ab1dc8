//! Joint Bayesian inference of multiple related Gaussian graphical models.
//!
//! K groups observed on the same p variables each get a sparse precision
//! matrix; the same edge's precision entries are linked across groups through
//! an edge-shared K x K correlation matrix, so groups borrow strength where
//! their conditional-dependence structure agrees. The crate provides the MCMC
//! sampler, posterior summaries and diagnostics, a synthetic-scenario
//! generator, and a metrics harness for benchmarking graph recovery.

pub mod error;
pub mod export;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod sampler;
pub mod simgen;

pub use error::{Error, Result};
