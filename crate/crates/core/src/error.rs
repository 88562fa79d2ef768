use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: &'static str },

    #[error("{path}: no valid rows")]
    NoValidRows { path: PathBuf },

    #[error("{path}: duplicate date {date}")]
    DuplicateDate { path: PathBuf, date: NaiveDate },

    #[error("series `{0}` is too short")]
    SeriesTooShort(String),

    #[error("series `{0}` is empty")]
    EmptySeries(String),

    #[error("calendar intersection of all series is empty")]
    EmptyIntersection,

    #[error("window {start}..={end} selects no trading days")]
    EmptyWindow { start: NaiveDate, end: NaiveDate },

    #[error("unknown market index `{0}`")]
    UnknownIndex(String),

    #[error("insufficient cash: requested {requested}, available {available}")]
    InsufficientCash { requested: f64, available: f64 },

    #[error("oversell of `{asset}`: requested {requested}, held {held}")]
    Oversell {
        asset: String,
        requested: f64,
        held: f64,
    },

    #[error("portfolio equity is not positive ({equity})")]
    Bankrupt { equity: f64 },

    #[error("history has {len} days, shorter than one block of {block}")]
    HistoryTooShort { len: usize, block: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the scenario document rather than the data
    /// or the run itself.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
