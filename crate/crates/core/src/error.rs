//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by geometry construction, audits and IO.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("delta = {0} is not a negative power of two")]
    NonDyadicDelta(f64),

    #[error("beta = {0} outside the admissible range {1}")]
    BetaOutOfRange(f64, &'static str),

    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("basis rows are not orthonormal (residual {0:.3e})")]
    NotOrthonormal(f64),

    #[error("offset is not perpendicular to the direction (residual {0:.3e})")]
    OffsetNotPerpendicular(f64),

    #[error("offset norm {0} is not strictly below 1/2")]
    OffsetOutOfRange(f64),

    #[error("plane does not meet the unit ball (offset norm {0})")]
    EmptyIntersection(f64),

    #[error("grid of {cells} cells exceeds the {limit}-cell guard")]
    GridTooLarge { cells: u128, limit: u128 },

    #[error("candidate pool of {size} points exceeds the {limit}-point guard")]
    PoolTooLarge { size: u128, limit: u128 },

    #[error(
        "spacing bound violated at r = {r}: ball around member {center} holds {count} > {bound}"
    )]
    SpacingViolation {
        r: f64,
        center: usize,
        count: usize,
        bound: f64,
    },

    #[error("perpendicular spans have rank {rank} <= {dim}; tuple is not transverse")]
    NotTransverse { rank: usize, dim: usize },

    #[error("slab is not contained in the carrier slab (margin {0:.3e})")]
    NotContainedInSlab(f64),

    #[error("family leaves the chart domain (direction distance {0} > {1})")]
    ChartDomainExceeded(f64, f64),

    #[error("need at least {needed} data points, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("nonpositive value at index {0}; log-log fit undefined")]
    NonPositiveValue(usize),

    #[error("target family size {target} unreachable; achieved {achieved}")]
    TargetSizeUnreachable { target: usize, achieved: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
