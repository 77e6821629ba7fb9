//! Command-line pipeline, file formats and dataset tooling around
//! `ankge-core`.

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod container;
pub mod digest;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
