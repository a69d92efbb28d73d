use std::path::PathBuf;

use crate::types::EntityType;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid pattern for {etype}: {source}")]
    Pattern {
        etype: EntityType,
        #[source]
        source: regex::Error,
    },

    #[error("unknown entity type code {0:?}")]
    UnknownEntityType(String),

    #[error("invalid spans: {0}")]
    InvalidSpans(String),

    #[error("overlapping manual spans [{first_start}, {first_end}) and [{second_start}, {second_end})")]
    OverlappingManualSpans {
        first_start: usize,
        first_end: usize,
        second_start: usize,
        second_end: usize,
    },

    #[error("surrogate pool exhausted for {0}")]
    PoolExhausted(EntityType),

    #[error("forced mapping rejected: {0}")]
    ForcedMapping(String),

    #[error("could not produce an invertible anonymization after {0} attempts")]
    Unstable(usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("length mismatch: {0} gold labels vs {1} predictions")]
    LengthMismatch(usize, usize),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Backend(#[from] crate::backend::BackendError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
