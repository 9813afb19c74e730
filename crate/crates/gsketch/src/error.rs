use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum GsError {
    #[error("malformed label: {0}")]
    MalformedLabel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("counter overflow while updating sketch")]
    CounterOverflow,

    #[error("degenerate vertex stats: {0}")]
    DegenerateStats(String),

    #[error("fewer than 2 vertices, node is not splittable")]
    NotSplittable,

    #[error("missing workload weight for vertex {0:?}")]
    MissingWeight(String),

    #[error("invalid plan: {0}")]
    PlanInvalid(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed query: {0}")]
    MalformedQuery(String),

    #[error("relative error undefined: true frequency is zero")]
    UndefinedTruth,

    #[error("empty query set")]
    EmptyQuerySet,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("population too small: requested {requested}, have {available}")]
    InsufficientPopulation { requested: usize, available: usize },

    #[error("corrupt snapshot: {0}")]
    Snapshot(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GsError>;

impl GsError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        GsError::Io {
            path: path.into(),
            source,
        }
    }
}
