//! Spectral-Galerkin simulation and certification of pullback attractors
//! for locally monotone SPDE with additive Lévy noise.

pub mod attractor;
pub mod basis;
pub mod conditions;
pub mod config;
pub mod error;
pub mod flow;
pub mod models;
pub mod noise;
pub mod ou;
pub mod rng;
pub mod runner;
pub mod solver;
pub mod testutil;

pub use error::{Error, Result};
