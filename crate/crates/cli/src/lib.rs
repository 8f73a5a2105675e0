//! Std companion to `costvalley-core`: the on-disk formats (PGM grids, CSV
//! clouds and logs, JSON records, TOML scenarios) and the `costvalley`
//! command-line tool built on them.

pub mod cli;
pub mod config_file;
pub mod error;
pub mod formats;
pub mod pgm;

pub use error::{CliError, ExitCode};
