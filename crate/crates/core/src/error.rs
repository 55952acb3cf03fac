use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate sample id `{id}` in {context}")]
    DuplicateId { id: String, context: String },

    #[error("stratification failed: {0}")]
    Stratification(String),

    #[error("artifact format error: {0}")]
    Format(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("comparing response `{response}`: {source}")]
    Comparator {
        response: String,
        #[source]
        source: Box<Error>,
    },

    #[error("sample `{id}` has no row for descriptor `{descriptor}`")]
    IncompleteModality { id: String, descriptor: String },

    #[error("rank store has no ranks for response `{0}`")]
    IncompleteStore(String),

    #[error("unknown sample `{0}`")]
    UnknownSample(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("arity error: {0}")]
    Arity(String),

    #[error("cutoff {k} exceeds list length {len}")]
    Cutoff { k: usize, len: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("incompatible artifacts: {0}")]
    Compatibility(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// The innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code for the CLI. Each error class maps to its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Io { .. } => 2,
            Error::Parse { .. } | Error::DuplicateId { .. } => 3,
            Error::Format(_) => 4,
            Error::Config(_) => 5,
            Error::Compatibility(_) => 6,
            Error::IncompleteModality { .. }
            | Error::IncompleteStore(_)
            | Error::UnknownSample(_) => 7,
            Error::Domain(_) | Error::DegenerateInput(_) | Error::Comparator { .. } => 8,
            Error::Shape { .. } | Error::Alignment(_) | Error::Arity(_) | Error::Cutoff { .. } => 9,
            Error::Stratification(_) | Error::DegenerateLabels(_) => 10,
        }
    }
}
