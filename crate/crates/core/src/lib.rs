//! Permutation-invariant matrix observables (PIMOs) over word-matrix ensembles.
//!
//! A PIMO is a polynomial in the entries of a D×D matrix that is unchanged
//! under simultaneous row/column permutation `M_ij -> M_{s(i)s(j)}`. Each such
//! polynomial is indexed by a directed multigraph: nodes are summed indices,
//! edges are matrix factors (`M_st` for an edge `s -> t`). This crate provides
//!
//! * [`graph`] — the canonical 28-observable table and the graph language;
//! * [`contract`] — contraction-planned evaluation of observables on matrices;
//! * [`ensemble`] — matrix-ensemble ingestion, mixing, and invariant statistics;
//! * [`gauss`] — a moment-matched permutation-invariant Gaussian reference
//!   model: pattern-moment fitting, Wick-theorem moment prediction,
//!   Gaussianity scoring, and synthetic sampling;
//! * [`geometry`] — observable-value/deviation feature vectors with diagonal,
//!   Mahalanobis and flat inner products;
//! * [`tasks`] — lexical-relation experiments (relation means, divide-based
//!   classification, split protocols, hypernym-length test, baselines);
//! * [`report`] — JSON/CSV report envelopes used by the `pimo` CLI.
//!
//! All randomized operations take explicit seeds and are deterministic; all
//! reductions run in a fixed order so repeated runs produce byte-identical
//! reports.

pub mod contract;
pub mod ensemble;
pub mod gauss;
pub mod geometry;
pub mod graph;
pub mod numeric;
pub mod partitions;
pub mod report;
pub mod tasks;

// Matrix types appear throughout the public API; re-export the linear
// algebra crate so downstream code can name them without pinning its own
// copy to a matching version.
pub use nalgebra;

/// Crate-wide error type, classed by failure kind.
///
/// The CLI maps each class to a stable process exit code (in parentheses).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Inconsistent or out-of-range request — bad flag values, unknown set
    /// names, mismatched dimensions between arguments (exit 2).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Unreadable or malformed input files (exit 3).
    #[error("ingestion error: {0}")]
    Ingest(String),
    /// Numerical failure, e.g. a covariance that is not positive semidefinite
    /// beyond the documented jitter budget (exit 4).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Structurally valid but degenerate data: empty ensembles, empty
    /// relation classes, splits that cannot be drawn (exit 5).
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

impl Error {
    /// Process exit code for this error class (0 is success).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) => 2,
            Error::Ingest(_) => 3,
            Error::Numerical(_) => 4,
            Error::Degenerate(_) => 5,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
