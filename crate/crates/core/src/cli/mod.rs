//! Command-line driver: problem files, example registry and commands.

pub mod commands;
pub mod file;

pub use commands::{run, run_from, Cli, CliError};
pub use file::{FileError, ProblemFile, SolverConfig};

/// Shipped example problems, by name.
pub const EXAMPLES: [(&str, &str); 2] =
    [("ex31", include_str!("../../problems/ex31.prob")), ("ex32", include_str!("../../problems/ex32.prob"))];

pub fn example_source(name: &str) -> Option<&'static str> {
    EXAMPLES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn example(name: &str) -> Option<ProblemFile> {
    example_source(name).map(|s| ProblemFile::parse(s).expect("shipped examples parse"))
}
