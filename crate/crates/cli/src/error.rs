use std::path::PathBuf;

use thiserror::Error;

/// Problems with a config file; the CLI exits with status 2 on any of them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown problem '{name}'")]
    UnknownProblem { line: usize, name: String },

    #[error("line {line}: unknown method '{name}'")]
    UnknownMethod { line: usize, name: String },
}

/// Failures while executing an experiment.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(#[from] hessdamp::Error),
}
