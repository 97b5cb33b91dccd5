use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: non-finite value {value:?}")]
    NonFinite {
        path: PathBuf,
        line: usize,
        value: String,
    },

    #[error("{path}:{line}: duplicate word {word:?}")]
    DuplicateWord {
        path: PathBuf,
        line: usize,
        word: String,
    },

    #[error("vocabulary is empty after applying minimum count {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("need at least {needed} words, got {got}")]
    TooFewWords { needed: usize, got: usize },

    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),

    #[error("only {retained} of {total} pairs are in vocabulary; need at least 2")]
    TooFewPairs { retained: usize, total: usize },

    #[error("the two vocabularies share no words")]
    EmptyCommonVocabulary,

    #[error("no words of group {group:?} are in the common vocabulary")]
    EmptyGroup { group: String },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("degenerate system: {0}")]
    Degenerate(String),

    #[error("input has zero variance")]
    ZeroVariance,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing artifact {path} (run `{stage}` first)")]
    MissingArtifact { path: PathBuf, stage: String },

    #[error("artifact {path} changed since it was recorded (rerun `{stage}`)")]
    StaleArtifact { path: PathBuf, stage: String },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

impl Error {
    /// Short label grouping errors by what the user has to fix.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } | Error::NonFinite { .. } | Error::DuplicateWord { .. } => "format",
            Error::MissingArtifact { .. } | Error::StaleArtifact { .. } => "artifact",
            Error::InvalidParameter(_) | Error::Config(_) => "config",
            _ => "data",
        }
    }

    /// Process exit code for [`Error::category`].
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "io" => 3,
            "format" => 4,
            "artifact" => 5,
            _ => 6,
        }
    }
}
