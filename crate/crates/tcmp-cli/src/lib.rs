//! Support library for the `tcmp` binary: file formats, report
//! documents, and the exit-code policy. Lives in a library target so
//! integration tests can build fixtures through the same code paths
//! the binary uses.

use std::fmt;
use std::path::PathBuf;

pub mod format;

/// Exit codes, a total function of the solve outcome:
/// 0 solved, 2 malformed or insufficient input (also any internal
/// failure), 3 infeasible, 4 indeterminate, 5 relation integrity
/// failure (the table contradicts its own column relation).
pub const EXIT_SOLVED: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_INDETERMINATE: u8 = 4;
pub const EXIT_RELATION: u8 = 5;

#[derive(Debug)]
pub enum CliError {
    Io(PathBuf, std::io::Error),
    Json(PathBuf, serde_json::Error),
    Lib(tcmp::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Json(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tcmp::Error> for CliError {
    fn from(e: tcmp::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(tcmp::Error::RelationViolated { .. })
            | CliError::Lib(tcmp::Error::InconsistentExtension { .. }) => EXIT_RELATION,
            _ => EXIT_INPUT,
        }
    }
}

/// Exit code for a finished solve.
pub fn exit_code_for_status(status: tcmp::solver::SolveStatus) -> u8 {
    match status {
        tcmp::solver::SolveStatus::Solved => EXIT_SOLVED,
        tcmp::solver::SolveStatus::Infeasible => EXIT_INFEASIBLE,
        tcmp::solver::SolveStatus::Indeterminate => EXIT_INDETERMINATE,
    }
}
