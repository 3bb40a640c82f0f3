use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed trial file or manifest. `line` is 1-based, `column` names the CSV field.
    #[error("{source_name}: line {line}{}: {message}", column.as_ref().map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        source_name: String,
        line: usize,
        column: Option<String>,
        message: String,
    },

    #[error("invalid trial {trial_id}: {message}")]
    InvalidTrial { trial_id: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("preprocessing error: {0}")]
    Preprocess(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("training error at {location}: {message}")]
    Training { location: String, message: String },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("fold {trial_id} failed: {source}")]
    Fold {
        trial_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
