//! Truncated density-dependent Markov jump processes on `ℤ^d`.
pub mod engine;
pub mod error;
pub mod experiments;
pub mod factor;
pub mod model;
pub mod sim;
mod simplex;
pub mod spectral;
pub use error::{Error, Result};
