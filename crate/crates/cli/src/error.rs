use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: invalid value for `{key}`: {reason}")]
    InvalidValue {
        origin: String,
        key: String,
        reason: String,
    },
    #[error("{origin}: expected key=value, found `{text}`")]
    Malformed { origin: String, text: String },
    #[error("no subcommand given")]
    MissingSubcommand,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    PointsFormat { path: PathBuf, message: String },
    #[error("{cell}: {source}")]
    Module {
        cell: String,
        source: supremum_core::Error,
    },
    #[error("serialization: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn module(cell: impl Into<String>) -> impl FnOnce(supremum_core::Error) -> CliError {
        let cell = cell.into();
        move |source| CliError::Module { cell, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
