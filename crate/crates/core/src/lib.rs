//! Bound states of a particle confined to a plane curve whose curvature
//! blows up at one point.
//!
//! Two routes to the spectrum are provided. The singular curvature can be
//! smoothed into a family κ_ε, each member solved with finite differences,
//! and the eigenvalues extrapolated to ε → 0. Alternatively the singular
//! problem is solved directly in a weak form that only needs the L²
//! primitive of the potential.

// `!(x > 0.0)` is used on purpose so NaN falls on the rejecting side
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod convergence;
pub mod error;
pub mod geometry;
pub mod output;
pub mod quadrature;
pub mod regularization;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};
