//! Moment estimation for binary network models whose degree sequence is
//! released with additive sub-Gamma noise.

pub mod bounds;
pub mod error;
pub mod estimator;
pub mod io;
pub mod linkmodels;
pub mod noise;
pub mod rng;
pub mod simharness;
pub mod stats;

pub use error::{Error, Result};
