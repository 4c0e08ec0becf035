//! Command implementations behind the `game` binary.

pub mod commands;
pub mod presets;
pub mod report;
pub mod rundir;

use std::fmt;

use game_core::analysis::AnalysisError;
use game_core::domains::DomainError;
use game_core::evolve::EvolveError;
use game_core::io::IoError;

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments: exit code 2.
    Usage(String),
    /// Invalid manifest, corrupt file or violated invariant: exit code 3.
    Validation(String),
    /// Anything else going wrong while running: exit code 4.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Runtime(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::File { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<EvolveError> for CliError {
    fn from(e: EvolveError) -> Self {
        match e {
            EvolveError::Config(_) | EvolveError::Resume(_) => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        CliError::Validation(e.to_string())
    }
}

/// Runs `$body` with `$d` bound to the domain described by `$params`.
#[macro_export]
macro_rules! with_domain {
    ($params:expr, |$d:ident| $body:expr) => {
        match $params {
            game_core::io::manifest::DomainParams::Skirmish(p) => {
                let $d = game_core::domains::Skirmish::new(p.clone())?;
                $body
            }
            game_core::io::manifest::DomainParams::Pusher(p) => {
                let $d = game_core::domains::Pusher::new(p.clone())?;
                $body
            }
        }
    };
}
