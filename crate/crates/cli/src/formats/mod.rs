//! On-disk formats: tracks CSV, embeddings binary, zones CSV, camera
//! link model text, results CSV. All text formats carry an explicit
//! version tag line and round-trip losslessly.

pub mod clm;
pub mod embeddings;
pub mod results;
pub mod tracks;
pub mod zones;

use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}: {message}")]
    Invalid { file: String, message: String },
}

impl FormatError {
    pub(crate) fn parse(file: &str, line: usize, message: impl fmt::Display) -> Self {
        FormatError::Parse {
            file: file.to_string(),
            line,
            message: message.to_string(),
        }
    }

    pub(crate) fn invalid(file: &str, message: impl fmt::Display) -> Self {
        FormatError::Invalid {
            file: file.to_string(),
            message: message.to_string(),
        }
    }
}

/// Split one delimited line into exactly `n` fields.
pub(crate) fn fields<'a>(
    file: &str,
    lineno: usize,
    line: &'a str,
    n: usize,
) -> Result<Vec<&'a str>, FormatError> {
    let parts: Vec<&str> = line.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(FormatError::parse(
            file,
            lineno,
            format!("expected {n} comma-separated fields, got {}", parts.len()),
        ));
    }
    Ok(parts)
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    file: &str,
    lineno: usize,
    name: &str,
    raw: &str,
) -> Result<T, FormatError> {
    raw.parse().map_err(|_| {
        FormatError::parse(file, lineno, format!("invalid {name} value `{raw}`"))
    })
}
