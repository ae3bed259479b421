//! Command-line front end: argument parsing, subcommands and the JSON report.

pub mod args;
pub mod commands;
pub mod report;
