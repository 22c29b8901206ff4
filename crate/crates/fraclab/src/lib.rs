//! Command-line verification harness around `fraclab-core`: TOML
//! configuration, a bounded worker pool, JSON and CSV reports, and
//! convergence sweeps.

pub mod config;
pub mod functions;
pub mod output;
pub mod runner;
pub mod sweep;

pub use config::{Config, Identity};
pub use functions::FunctionSpec;
pub use output::Report;
pub use runner::RunRecord;
