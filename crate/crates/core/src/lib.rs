//! Monte Carlo laboratory for stochastic billiards in unbounded planar tubes.
//!
//! The crate simulates the collision chain of a particle reflecting at random
//! angles inside `{x > A, |y| < g(x)}`, compares empirical increment moments
//! with their asymptotic predictions, and checks Lamperti-type conditions and
//! growth-rate criteria on the simulated chains and on reference chains.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::result_large_err)]

pub mod billiard;
pub mod chains;
pub mod criteria;
pub mod error;
pub mod geometry;
pub mod lamperti;
pub mod output;
pub mod reflection;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
