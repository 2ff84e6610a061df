//! Monte Carlo harness, file formats and command-line front end for `svyboot-core`.

pub mod commands;
pub mod config;
mod error;
pub mod experiments;
pub mod io;
pub mod parallel;
pub mod populations;

pub use error::{HarnessError, Result};
