//! Error type shared by every module in the crate.
//!
//! Errors split into two broad families that callers (notably the CLI)
//! treat differently: *validation* errors — bad arguments, malformed
//! input, domain violations — and *numerical* errors — an iteration that
//! failed to meet its tolerance or bracket a root. [`Error::is_numerical`]
//! makes that distinction without matching on every variant.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value fell outside the range covered by a table or grid.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// A text stream could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A parsed record failed validation; identifies the offending record.
    #[error("invalid record {which} (line {line}): {message}")]
    InvalidRecord {
        /// Label of the record if present, otherwise its ordinal.
        which: String,
        /// 1-based line in the source stream.
        line: usize,
        message: String,
    },

    /// A trace was requested at a prime of bad reduction.
    #[error("bad reduction at p = {p}: trace is not defined by point counting")]
    BadReduction { p: u64 },

    /// A family operation found no curves in a required class.
    #[error("empty class: {0}")]
    EmptyClass(String),

    /// Input admits no meaningful answer (e.g. a single-class training set).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// An iterative routine failed to converge or bracket its target.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of numerical routines (as opposed to invalid
    /// input or I/O). The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalFailure(_))
    }
}
