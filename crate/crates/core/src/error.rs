use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}line {line}: {msg}", source_prefix(.source_name))]
    Parse {
        source_name: Option<String>,
        line: usize,
        msg: String,
    },

    #[error("invalid chain: {0}")]
    Validation(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parameter column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("covariance is not positive definite (pivot {pivot}, value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("all neighbour volumes are zero; the chain is degenerate")]
    Degenerate,

    #[error("non-finite value at sample {index}: {msg}")]
    Numeric { index: usize, msg: String },
}

fn source_prefix(name: &Option<String>) -> String {
    match name {
        Some(n) => format!("{n}: "),
        None => String::new(),
    }
}

impl Error {
    /// True for input/format problems, false for numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation(_) | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
