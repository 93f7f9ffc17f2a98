//! Library half of the `advkit` command-line tool, split out so the
//! commands and the ranking service can be exercised from tests.

pub mod commands;
pub mod config;
pub mod service;

pub use config::PipelineConfig;
