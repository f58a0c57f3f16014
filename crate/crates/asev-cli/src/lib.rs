//! Library half of the `asev` command-line tool: scenario-document loading
//! and the implementations behind each subcommand. Kept as a library so
//! integration tests can drive the same code paths the binary uses.

pub mod commands;
pub mod scenario_file;
