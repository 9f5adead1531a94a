//! Figure and table reproduction, parameter sweeps, configuration files and the CLI.

pub mod cli;
pub mod config;
pub mod output;
pub mod scenarios;

pub use config::{Config, Metric, ScanSpec, ScanTarget, SweepParameter};
pub use output::{emit_csv, emit_svg_lineplot, parse_csv, ScanResult};
pub use scenarios::{RunOptions, Scenario};
