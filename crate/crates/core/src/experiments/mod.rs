//! Reproducible studies built on the engine and the simulator.

pub mod bivariate;
pub mod bounds;
pub mod config;
pub mod constants;
pub mod dynamics;
pub mod fit;
pub mod studies;
pub mod table;
