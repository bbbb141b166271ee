//! Configuration, output formats and subcommands of the `thinslab` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
