use thiserror::Error;

use crate::coeffs::IndexTriple;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument lies outside the range where the operation is defined.
    #[error("{what} out of range: {detail}")]
    Range { what: &'static str, detail: String },

    #[error("monomial n-indices must be strictly increasing, got {0:?}")]
    UnsortedMonomial(Vec<u32>),

    #[error("duplicate monomial {0:?}")]
    DuplicateMonomial(Vec<IndexTriple>),

    #[error("index {triple} outside collection bounds (k* = {k_star}, N = {dim})")]
    IndexBounds { triple: IndexTriple, k_star: u32, dim: u32 },

    #[error("no moment available for X_{{{},{}}}^{}", .0.n, .0.j, .0.k)]
    MissingMoment(IndexTriple),

    #[error("law {law} has no Doeblin witness: {reason}")]
    NotCertifiable { law: String, reason: String },

    #[error("moment of order {order} is infinite for {law}")]
    InfiniteMoment { law: String, order: u32 },

    #[error("invalid law parameters: {0}")]
    InvalidLaw(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient signal: {0}")]
    NoiseDominated(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn range(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Range {
            what,
            detail: detail.into(),
        }
    }
}
