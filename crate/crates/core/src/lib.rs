//! Pass-quality rating from football tracking and event data.

pub mod classifier;
pub mod cli;
pub mod config;
pub mod dominant;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod geometry;
pub mod labels;
pub mod match_data;
pub mod motion;
pub mod synthetic;

pub use error::{Error, Result};
