//! Library half of the `hsicts` command-line tool: CSV input/output, report
//! assembly and the subcommand implementations.

pub mod commands;
pub mod failure;
pub mod io;
pub mod report;

pub use failure::Failure;
