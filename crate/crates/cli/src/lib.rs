//! Configuration-driven experiment runner for the `qae` command.

pub mod compare;
pub mod config;
pub mod engines;
pub mod lab;
pub mod plots;
pub mod runner;

pub use compare::{compare, format_table, Comparison, ComparisonRow};
pub use config::{ExperimentConfig, InstanceSource, OUTPUT_ENV};
pub use engines::{Engine, EngineRegistry};
pub use runner::{run, ResultRecord, Summary, SCHEMA_VERSION};
