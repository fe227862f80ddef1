use alloc::string::String;
use core::fmt;

use crate::corpus::Side;
use crate::gateway::GatewayError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A record violates one of its construction invariants.
    InvalidRecord(String),
    DuplicateId(String),
    EmptyCorpus,
    InvalidConfig(String),
    DimensionMismatch { expected: usize, found: usize },
    /// The embedding provider could not encode a keyword.
    Embedding { keyword: String, message: String },
    /// A keyword response could not be read even after the repair pass.
    KeywordParse { reason: String, raw: String },
    NoKeywords,
    UnknownFeature(String),
    UnknownLabel { row: usize, token: String },
    /// A metric is undefined for the given input (zero denominator, single class).
    UndefinedMetric(&'static str),
    EmptyOverlap,
    Assignment(String),
    Gateway(GatewayError),
    /// Gateway failure while matching one side of a patient-trial pair.
    Pair {
        patient_id: String,
        nct_id: String,
        side: Side,
        source: GatewayError,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidRecord(what) => write!(f, "invalid record: {what}"),
            Error::DuplicateId(id) => write!(f, "duplicate identifier {id}"),
            Error::EmptyCorpus => f.write_str("corpus is empty"),
            Error::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "vector dimension mismatch: expected {expected}, found {found}")
            }
            Error::Embedding { keyword, message } => {
                write!(f, "could not embed keyword {keyword:?}: {message}")
            }
            Error::KeywordParse { reason, raw } => {
                write!(f, "unparseable keyword response ({reason}): {raw:?}")
            }
            Error::NoKeywords => f.write_str("keyword response contained no keywords"),
            Error::UnknownFeature(name) => write!(f, "unknown ranking feature {name:?}"),
            Error::UnknownLabel { row, token } => {
                write!(f, "row {row}: unknown relevance label {token:?}")
            }
            Error::UndefinedMetric(why) => write!(f, "metric undefined: {why}"),
            Error::EmptyOverlap => f.write_str("no run overlaps the cohort's judged patients"),
            Error::Assignment(what) => write!(f, "cannot build screening assignment: {what}"),
            Error::Gateway(e) => write!(f, "gateway: {e}"),
            Error::Pair {
                patient_id,
                nct_id,
                side,
                source,
            } => write!(f, "matching {patient_id}/{nct_id} ({side}): {source}"),
        }
    }
}

impl core::error::Error for Error {}

impl From<GatewayError> for Error {
    fn from(e: GatewayError) -> Self {
        Error::Gateway(e)
    }
}
