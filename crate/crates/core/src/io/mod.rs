//! Configuration files, CSV tables, plot specifications and the command line.

pub mod cli;
pub mod config;
pub mod plot;
pub mod tables;

pub use config::{ResolvedConfig, ResultSet, RunConfig, TaxonomySpec};
