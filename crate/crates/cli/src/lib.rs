//! Experiment drivers and configuration for the `bgk-imex` command line.

pub mod config;
pub mod experiments;
