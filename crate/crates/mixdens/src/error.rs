use std::path::PathBuf;

use thiserror::Error;

pub type AppResult<T> = Result<T, AppError>;

#[derive(Debug, Error)]
pub enum AppError {
    /// Bad command line or configuration; `flag` names the offending option.
    #[error("{flag}: {message}")]
    Usage { flag: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] mixdens_core::Error),

    #[error("n = {n}, replication {replication}: {source}")]
    Cell {
        n: usize,
        replication: usize,
        source: mixdens_core::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("write failed: {0}")]
    Write(std::io::Error),

    #[error("{0}")]
    Runtime(String),
}

impl AppError {
    pub fn usage(flag: impl Into<String>, message: impl Into<String>) -> Self {
        AppError::Usage {
            flag: flag.into(),
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        AppError::Config(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn write(source: std::io::Error) -> Self {
        AppError::Write(source)
    }

    /// Failure to write a CSV record, keeping the underlying IO error.
    pub fn csv_write(source: csv::Error) -> Self {
        match source.into_kind() {
            csv::ErrorKind::Io(e) => AppError::Write(e),
            other => AppError::Runtime(format!("csv encoding failed: {other:?}")),
        }
    }

    /// The reader closed the output stream (e.g. `| head`).
    pub fn is_broken_pipe(&self) -> bool {
        matches!(self, AppError::Write(e) if e.kind() == std::io::ErrorKind::BrokenPipe)
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Usage { .. } => "usage",
            AppError::Config(_) => "config",
            AppError::Core(_) | AppError::Cell { .. } => "numeric",
            AppError::Parse { .. } => "parse",
            AppError::Io { .. } | AppError::Write(_) => "io",
            AppError::Runtime(_) => "runtime",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage { .. } | AppError::Config(_) => 2,
            _ => 1,
        }
    }

    /// `error kind=<kind> [flag=<flag>] message="<text>"` on one line.
    pub fn machine_line(&self) -> String {
        let escape = |s: &str| {
            s.replace('\\', "\\\\")
                .replace('"', "\\\"")
                .replace('\n', " ")
        };
        match self {
            AppError::Usage { flag, message } => format!(
                "error kind={} flag={flag} message=\"{}\"",
                self.kind(),
                escape(message)
            ),
            _ => format!(
                "error kind={} message=\"{}\"",
                self.kind(),
                escape(&self.to_string())
            ),
        }
    }
}
