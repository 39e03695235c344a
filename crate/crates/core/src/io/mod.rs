//! Configuration files, number formatting and result emission.

mod config;
mod emit;
mod format;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{config_hash, load_config, ConfigFile};
pub use emit::{
    emit_results, CriticalRateRow, Format, Metadata, NodeRow, Payload, ResultEnvelope, ValidationSummary,
    COMPARISON_COLUMNS,
};
pub use format::{fmt_num, fmt_opt, SIGNIFICANT_DIGITS};

use crate::model::ConfigError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("cannot read {}: {message}", path.display())]
    Read { path: PathBuf, message: String },
    #[error("cannot write {}: {message}", path.display())]
    Write { path: PathBuf, message: String },
    #[error("cannot parse {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("no scheme given in the config file or on the command line")]
    MissingScheme,
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn write_output(text: &str, path: Option<&Path>) -> Result<(), IoError> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| IoError::Write {
            path: p.to_path_buf(),
            message: e.to_string(),
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| IoError::Write {
                    path: PathBuf::from("<stdout>"),
                    message: e.to_string(),
                })
        }
    }
}
