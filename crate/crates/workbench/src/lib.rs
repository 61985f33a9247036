//! File formats, experiment drivers and the command-line front end for
//! `case-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod io;
pub mod report;
pub mod stats;

pub use config::RunConfig;

/// Errors from the workbench layer.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] case_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{0}")]
    Checkpoint(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Experiment(String),
}

impl Error {
    /// Short machine-readable category used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(_) => "core",
            Error::Io(_) => "io",
            Error::Parse { .. } => "parse",
            Error::Checkpoint(_) => "checkpoint",
            Error::Config(_) => "config",
            Error::Experiment(_) => "experiment",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Wraps an IO error with the path it concerns.
pub(crate) fn at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}
