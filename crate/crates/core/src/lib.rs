//! Numerical laboratory for the alpha-parabolic dynamic programming principle.
//!
//! The crate is split along the lines of the problem:
//!
//! * [`domain`] parabolic cylinder geometry, grids and boundary data,
//! * [`dpp`] the averaging operator, the midrange and the exact time-slice
//!   recursion producing the discrete solution,
//! * [`game`] a seeded Monte-Carlo simulator of tug-of-war with noise,
//! * [`analysis`] expansion residuals, regularity moduli, barrier and
//!   oscillation checks and the auxiliary comparison functions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod domain;
pub mod dpp;
pub mod error;
pub mod game;
pub(crate) mod linalg;

pub use error::{Error, Result};

/// Tolerance used for half-open interval endpoints in time and for face
/// membership in space.
pub const EDGE_TOL: f64 = 1e-12;
