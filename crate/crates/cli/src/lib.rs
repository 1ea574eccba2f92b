//! Command-line front end: run configuration, CSV and SVG output, and the
//! `solve`, `verify-symmetry`, `sample-tmg` and `export-plot` commands.

pub mod commands;
pub mod config;
pub mod svg;
pub mod table;

pub use commands::CliError;
