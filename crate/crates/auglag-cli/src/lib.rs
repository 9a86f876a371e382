//! Experiment harness around the `auglag` solvers: config parsing, IDX
//! data loading, sweep execution, and CSV reporting.

pub mod config;
pub mod idx;
pub mod run;
