//! Config parsing, bundled scenarios and subcommands behind the `clod` binary.

pub mod commands;
pub mod config;
pub mod scenarios;
