use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot open {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("line {line}: missing price")]
    MissingPrice { line: u64 },

    #[error("{date}: price {price} is not strictly positive")]
    NonPositivePrice { date: NaiveDate, price: f64 },

    #[error("duplicate date {date}")]
    DuplicateDate { date: NaiveDate },

    #[error("need at least {required} observations, found {found}")]
    TooFewObservations { found: usize, required: usize },

    #[error("runs statistic has zero variance (m = {m}, n = {n}); normal approximation unusable")]
    DegenerateRunsVariance { m: usize, n: usize },

    #[error("one-period return variance is zero")]
    ZeroVariance,

    #[error("robust variance estimate is zero for q = {q}; need at least two distinct increments")]
    DegenerateTheta { q: usize },

    #[error("period q = {q} invalid for {returns} returns")]
    InvalidPeriod { q: usize, returns: usize },

    #[error("duplicate period q = {q}")]
    DuplicatePeriod { q: usize },

    #[error("allocation infeasible: requested {requested}, available {available}")]
    InfeasibleAllocation { requested: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl Error {
    /// True for failures that come from reading or validating input data, as
    /// opposed to failures inside a statistical computation.
    pub fn is_ingestion(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Malformed { .. }
                | Error::MissingPrice { .. }
                | Error::NonPositivePrice { .. }
                | Error::DuplicateDate { .. }
                | Error::TooFewObservations { .. }
        )
    }
}
