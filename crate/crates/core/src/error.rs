use thiserror::Error;

/// Errors raised by graph construction, solvers, kernels and simulations.
///
/// The bracketed tag at the start of every message is stable and is what the
/// command line front-end reports to callers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("[empty-base] the designated cluster has no vertices")]
    EmptyBase,
    #[error("[metric-unsupported] sup-norm metric needs planar coordinates on the base graph")]
    MetricUnsupported,
    #[error("[bad-parameter] {0}")]
    BadParameter(String),
    #[error("[invalid-graph] {0}")]
    InvalidGraph(String),
    #[error("[conditioning-failed] origin not in the largest cluster after {attempts} attempts")]
    ConditioningFailed { attempts: usize },
    #[error("[overlapping-boundary] source and sink sets intersect at vertex {vertex}")]
    OverlappingBoundary { vertex: usize },
    #[error("[disconnected] graph is not connected")]
    Disconnected,
    #[error("[invalid-flow] {reason} at vertex {vertex}")]
    InvalidFlow { vertex: usize, reason: String },
    #[error("[horizon-exceeds-truncation] horizon {horizon} exceeds truncation radius {radius}")]
    HorizonExceedsTruncation { horizon: u64, radius: u64 },
    #[error("[ball-exceeds-truncation] ball of radius {radius} reaches the truncation boundary")]
    BallExceedsTruncation { radius: u64 },
    #[error("[divergent] killed walk never leaves the domain")]
    Divergent,
    #[error("[bad-range] truncated Green kernel needs a <= b, got a = {a}, b = {b}")]
    BadRange { a: u64, b: u64 },
    #[error("[bad-height] start height {h} above tooth length {m}")]
    BadHeight { h: u64, m: u64 },
    #[error("[cap-exceeded] walk did not stop within {steps} steps")]
    CapExceeded { steps: u64 },
    #[error("[too-large] {0}")]
    TooLarge(String),
    #[error("[parse] line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("[solver] {0}")]
    Solver(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
