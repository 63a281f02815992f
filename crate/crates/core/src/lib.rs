//! Frank-Wolfe on strongly convex sets with affine-invariant step sizes.
//!
//! The crate is organised around the pieces a Frank-Wolfe experiment needs:
//!
//! - [`geometry`]: gauges (Minkowski functionals), their duals, and sampled
//!   certificates for set strong convexity and the scaling inequality.
//! - [`problems`]: objectives, feasible sets with linear minimization oracles,
//!   affine reparametrizations, and datasets for empirical risk problems.
//! - [`stepsize`]: step-size policies, including the affine-invariant
//!   backtracking rule driven by the directional smoothness constant.
//! - [`solver`]: the Frank-Wolfe loop producing a [`solver::Trace`].
//! - [`analysis`]: estimators of the theoretical constants, theory bounds,
//!   inequality suites, rate fits and affine-covariance reports.
//! - [`suites`]: the built-in problem battery and the named verification
//!   criteria used by the acceptance tests and the `verify` subcommand.
//!
//! Heavy sampling loops run through [`par::Execution`], which uses rayon when
//! the `parallel` feature is enabled and falls back to a sequential loop
//! otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod par;
pub mod problems;
pub mod solver;
pub mod stepsize;
pub mod suites;

pub use error::{Error, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
