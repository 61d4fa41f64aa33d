use std::fmt;

use stylometry_core::Error;

pub const USAGE: i32 = 1;
pub const MISSING: i32 = 2;
pub const INVALID_DATA: i32 = 3;
pub const INTERNAL: i32 = 4;

/// A message for stderr together with the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub type Outcome<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn missing(message: impl Into<String>) -> Self {
        CliError {
            code: MISSING,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError {
            code: INVALID_DATA,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: INTERNAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn code_for(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::MissingAsset(_) => MISSING,
        Error::Invariant(_) => INTERNAL,
        Error::Parse { .. }
        | Error::LabelConflict(_)
        | Error::Unlabeled(_)
        | Error::InvalidInput(_)
        | Error::DimensionMismatch { .. }
        | Error::SchemaMismatch { .. }
        | Error::NonFinite(_) => INVALID_DATA,
    }
}

/// Attaches the failing stage to a core error.
pub trait Context<T> {
    fn stage(self, stage: &str) -> Outcome<T>;
}

impl<T> Context<T> for stylometry_core::Result<T> {
    fn stage(self, stage: &str) -> Outcome<T> {
        self.map_err(|e| CliError {
            code: code_for(&e),
            message: format!("{stage}: {e}"),
        })
    }
}
