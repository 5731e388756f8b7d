use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the pure arithmetic layer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),
    #[error("count overflow in {0}")]
    Overflow(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("empty pattern")]
    EmptyPattern,
    #[error("token {0:?} is not normalized")]
    UnnormalizedToken(String),
    #[error("malformed query {query:?}: {reason}")]
    Malformed { query: String, reason: String },
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),
    #[error("corpus has more documents than the index can address")]
    TooManyDocuments,
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("no fixture entry for query `{0}`")]
    MissingFixtureEntry(String),
    #[error("transport failure for `{query}`: {reason}")]
    TransportFailure { query: String, reason: String },
    #[error("malformed response for `{query}`: {reason}")]
    MalformedResponse { query: String, reason: String },
    #[error("storage failure at {path}: {reason}")]
    StorageFailure { path: PathBuf, reason: String },
    #[error("invalid provider configuration: {0}")]
    Config(String),
    #[error("while fetching `{query}`: {source}")]
    Annotated {
        query: String,
        #[source]
        source: Box<ProviderError>,
    },
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("total for column {column} (`{query}`): {source}")]
    Total {
        column: &'static str,
        query: String,
        #[source]
        source: ProviderError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{} cell(s) failed", .0.len())]
    Cells(Vec<crate::analysis::CellFailure>),
}
