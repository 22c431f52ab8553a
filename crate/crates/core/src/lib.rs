#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Low-rank graphon estimation by singular value thresholding, and targeted
//! interventions in linear-quadratic network and graphon games.

pub mod error;
pub mod estimator;
pub mod games;
pub mod rng;
pub mod graphon;
pub mod harness;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(test)]
#[path = "../tests/common/oracles.rs"]
mod oracles;
