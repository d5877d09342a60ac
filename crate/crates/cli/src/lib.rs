//! Library side of the `wkr` command-line tool.
//!
//! Each subcommand resolves a flat JSON config (optionally overridden by
//! flags), runs the corresponding study from `wiener-kernel`, and writes
//! CSV plot data plus a `manifest.json` into an output directory.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(wiener_kernel::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("validation failed: {0}")]
    ValidationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::ValidationFailed(_) => EXIT_VALIDATION,
        }
    }
}

impl From<wiener_kernel::Error> for CliError {
    fn from(e: wiener_kernel::Error) -> Self {
        use wiener_kernel::Error as E;
        match e {
            E::ConfigInvalid(_)
            | E::InvalidParameter { .. }
            | E::NonPositiveRidge(_)
            | E::NonPositiveStd(_)
            | E::WrongKernelVariant
            | E::Empty(_) => CliError::Config(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
