//! Optimal stopping of path-dependent functionals of Brownian motion and
//! fractional Brownian motion, approximated on a random-walk skeleton.

pub mod error;
pub mod experiment;
pub mod fbm_kernel;
pub mod oracles;
pub mod quadrature;
pub mod rng;
pub mod skeleton;
pub mod state_models;
pub mod stop_dp;

pub use error::{Error, Result};
