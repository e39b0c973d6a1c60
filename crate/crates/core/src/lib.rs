pub mod commands;
pub mod config;
pub mod error;
pub mod fft;
pub mod field;
pub mod harness;
pub mod noise;
pub mod nonlinearity;
pub mod polymer;
pub mod quad;
pub mod solver;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
