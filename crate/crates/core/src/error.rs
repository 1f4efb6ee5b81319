//! Crate-wide error type.

use crate::types::EgoId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("unexpected header in {path}: expected `{expected}`, got `{got}`")]
    WrongHeader {
        path: String,
        expected: String,
        got: String,
    },

    #[error("{rejected} of {total} rows malformed in {path}; above the {threshold:.0}% tolerance, this looks like the wrong file")]
    TooManyMalformed {
        path: String,
        rejected: usize,
        total: usize,
        threshold: f64,
    },

    #[error("duplicate trait profile for ego {0}")]
    DuplicateProfile(EgoId),

    #[error("bad snapshot row at line {line} in {path}: {reason}")]
    BadSnapshotRow {
        path: String,
        line: u64,
        reason: String,
    },

    #[error("need at least {min} intervals, got {got}")]
    TooFewIntervals { min: u32, got: u32 },

    #[error("interval length must be positive")]
    EmptyIntervalLength,

    #[error("empty network for ego {0}")]
    EmptyNetwork(EgoId),

    #[error("missing signature for ego {ego} in interval I{interval}")]
    MissingSignature { ego: EgoId, interval: u32 },

    #[error("missing network for ego {ego} in interval I{interval}")]
    MissingNetwork { ego: EgoId, interval: u32 },

    #[error("not a probability distribution: {reason}")]
    NotADistribution { reason: String },

    #[error("jaccard undefined: both alter sets are empty")]
    BothSetsEmpty,

    #[error("transition matrix spans two egos: {a} vs {b}")]
    EgoMismatch { a: EgoId, b: EgoId },

    #[error("matrices disagree on max rank: {a} vs {b}")]
    MaxRankMismatch { a: usize, b: usize },

    #[error("cannot aggregate an empty matrix list")]
    NoMatrices,

    #[error("subgroup `{0}` is empty")]
    EmptySubgroup(String),

    #[error("no metric values for ego {0}")]
    MissingMetricValues(EgoId),

    #[error("sample too small for {what}: need at least {min}, got {got}")]
    SampleTooSmall {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("sample has zero variance; add a small jitter or report the exact point mass instead")]
    ZeroVariance,

    #[error("degenerate spread on axis {axis}; kernel density needs nonzero variance per axis")]
    DegenerateAxis { axis: &'static str },

    #[error("infeasible generator config: {0}")]
    InfeasibleConfig(String),
}
