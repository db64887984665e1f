//! Experiment runner behind the `ifem` binary.

pub mod config;
pub mod report;
pub mod run;
pub mod svg;

pub use config::Settings;
