//! Configuration and pipelines for the `bps` command-line tool.

pub mod config;
pub mod error;
pub mod pipeline;
