//! Config-driven batch front end for the countable bivariate fractal
//! interpolation toolkit: configuration ingestion, subcommand dispatch and
//! file exports.

pub mod config;
pub mod export;
pub mod runner;
