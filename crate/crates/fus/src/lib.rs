//! File formats, run configuration, the comparison harness and the command
//! line for the `fus-core` sampling library.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod sequence;

pub use error::{Error, Result};
