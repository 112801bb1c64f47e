use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::article::MetaField;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An operation that needs at least one item got none.
    Empty(&'static str),
    InvalidArgument(String),
    /// A metadata field required by a rule or feature was not supplied.
    MissingField { page_id: u64, field: MetaField },
    /// The quantity is mathematically undefined for this input
    /// (single-cluster silhouette, single-class ROC-AUC, ...).
    Undefined(&'static str),
    DimensionMismatch { expected: usize, found: usize },
    SingleClass,
    /// Not enough members in a class to draw the requested sample.
    Deficit { class: &'static str, available: usize, requested: usize },
    EmbeddingMiss(u64),
    Unresolvable(Vec<u64>),
    /// An article satisfied both the before and after rule chains.
    Consistency(u64),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Empty(what) => write!(f, "empty input: {what}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::MissingField { page_id, field } => {
                write!(f, "page {page_id}: missing metadata field `{}`", field.name())
            }
            Error::Undefined(what) => write!(f, "undefined: {what}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "feature dimension mismatch: expected {expected}, found {found}")
            }
            Error::SingleClass => f.write_str("training set contains a single class"),
            Error::Deficit { class, available, requested } => write!(
                f,
                "class `{class}` has {available} members, {requested} requested (deficit {})",
                requested - available
            ),
            Error::EmbeddingMiss(id) => write!(f, "no contextual embedding for page {id}"),
            Error::Unresolvable(ids) => write!(f, "unresolvable articles: {ids:?}"),
            Error::Consistency(id) => {
                write!(f, "page {id} satisfies both the before and after rule chains")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
