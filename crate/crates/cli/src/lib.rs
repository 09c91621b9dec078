//! Command-line front end: system documents, run reports and subcommands.

pub mod commands;
pub mod document;
pub mod report;
