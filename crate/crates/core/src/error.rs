use thiserror::Error;

use crate::data::AttrSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("column `{0}` is missing from the table header")]
    MissingColumn(String),

    #[error("unknown category `{value}` for attribute `{attr}` on row {row}")]
    UnknownCategory { attr: String, value: String, row: usize },

    #[error("non-numeric value `{value}` in numerical column `{attr}` on row {row}")]
    NonNumeric { attr: String, value: String, row: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("attribute index {index} out of range for a domain with {d} attributes")]
    AttrOutOfRange { index: usize, d: usize },

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("privacy budget overspent: spent {spent} + charge {charge} exceeds total {total}")]
    Overspend { spent: f64, charge: f64, total: f64 },

    #[error("model size {size_mb:.4} MB exceeds the memory cap of {cap_mb} MB")]
    MemoryCap { size_mb: f64, cap_mb: f64 },

    #[error("estimation objective became non-finite")]
    NonFiniteObjective,

    #[error("exponential mechanism called with no candidates")]
    EmptyCandidates,

    #[error("query {0} is not supported by any measurement")]
    UnsupportedQuery(AttrSet),

    #[error("query {query} is not in the candidate set of round {round}")]
    NotInCandidateSet { query: AttrSet, round: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("incompatible trace version {found} (expected {expected})")]
    TraceVersion { found: u32, expected: u32 },
}
