//! Spectral multifilter for list-decodable covariance estimation of Gaussians.

pub mod cli;
pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod matlin;
pub mod points;
pub mod rng;
pub mod scenarios;
pub mod sweeps;

pub use error::{Error, Result};
pub use points::Points;
