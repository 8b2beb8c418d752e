use std::path::PathBuf;

use factest_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {}{msg}", location(.path, .line))]
    Parse {
        path: Option<PathBuf>,
        line: Option<u64>,
        msg: String,
    },
    #[error("report error: {0}")]
    Report(String),
    #[error("cannot access {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(path: &Option<PathBuf>, line: &Option<u64>) -> String {
    match (path, line) {
        (Some(p), Some(l)) => format!("{} line {l}: ", p.display()),
        (None, Some(l)) => format!("line {l}: "),
        (Some(p), None) => format!("{}: ", p.display()),
        (None, None) => String::new(),
    }
}

impl CliError {
    pub fn parse(line: Option<u64>, msg: impl Into<String>) -> Self {
        CliError::Parse {
            path: None,
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn in_file(self, file: &std::path::Path) -> Self {
        match self {
            CliError::Parse { line, msg, .. } => CliError::Parse {
                path: Some(file.to_path_buf()),
                line,
                msg,
            },
            other => other,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for configuration, registry, plan, report and file-access problems,
    /// 3 for malformed input, 4 for numeric or degenerate data.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } => 3,
            CliError::Core(CoreError::Domain(_) | CoreError::Degenerate(_) | CoreError::Numeric(_)) => 4,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
