//! Text file formats. All of them are newline-delimited, space-separated
//! and use `.` as the decimal separator regardless of locale.

pub mod embedding;
pub mod lexicon;
pub mod manifest;
pub mod queries;
pub mod rankings;
pub mod scores;
pub mod snapshot;

use std::io;
use std::path::PathBuf;

/// Prints `x` with 17 significant digits, enough to round-trip any f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn push_floats(line: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            line.push(' ');
        }
        line.push_str(&format_f64(*v));
    }
}

pub(crate) fn parse_f64(field: &str, line: usize) -> Result<f64, FormatError> {
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(FormatError::syntax(line, format!("unparsable float {field:?}"))),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: streamwell_core::Error,
    },
    #[error(transparent)]
    Core(#[from] streamwell_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("read error: {0}")]
    Read(#[from] io::Error),
    #[error("{}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<FormatError>,
    },
}

impl FormatError {
    pub(crate) fn syntax(line: usize, message: impl Into<String>) -> Self {
        FormatError::Syntax {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn in_file(self, path: impl Into<PathBuf>) -> Self {
        FormatError::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

/// Recoverable oddities found while reading a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormatWarning {
    DuplicateToken { token: String, line: usize },
    CountMismatch { declared: usize, actual: usize },
}

impl std::fmt::Display for FormatWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatWarning::DuplicateToken { token, line } => {
                write!(f, "line {line}: duplicate token {token:?} ignored, first occurrence kept")
            }
            FormatWarning::CountMismatch { declared, actual } => {
                write!(f, "header declares {declared} entries but {actual} were read")
            }
        }
    }
}
