//! Numerical laboratory for fractional Brownian motion driven SDEs with
//! distributional drift: fBm sampling, local times, averaging operators,
//! nonlinear Young integration and path-by-path solvers.

pub mod averaging;
pub mod besov;
pub mod error;
pub mod fbm;
pub mod fracops;
pub mod localtime;
pub mod quad;
pub mod solver;
pub mod special;
pub mod stats;
pub mod young;

pub use error::{Error, Result};
