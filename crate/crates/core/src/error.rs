use thiserror::Error;

use crate::geometry::Hyperplane;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {index} = {value} lies outside {domain}")]
    OutOfDomain {
        index: usize,
        value: f64,
        domain: &'static str,
    },

    #[error("finite-difference step {0:e} is below the precision guard")]
    StepTooSmall(f64),

    #[error("no preimage in the simplex: {0}")]
    NoPreimage(NoPreimageReason),

    #[error("n = {n} exceeds the enumeration limit {max}")]
    TooLarge { n: usize, max: usize },

    #[error("ellipsoid center c = {c} must exceed 1/n for n = {n}")]
    InvalidCenter { n: usize, c: f64 },

    #[error("degenerate ellipsoid for n = {n}, c = {c}: non-positive semi-axis denominator {denominator:e}")]
    DegenerateEllipsoid { n: usize, c: f64, denominator: f64 },

    #[error("point is not on the ellipsoid boundary (quadratic form = {0})")]
    NotOnBoundary(f64),

    #[error("tangent normal cannot be normalized by its last component")]
    NormalizationSingular(Hyperplane),

    #[error("control vector does not lie on the simplex face (sum = {0})")]
    NotOnSimplexFace(f64),

    #[error("rate vector is not in the region (status {0})")]
    NotAMember(&'static str),

    #[error("rejection sampling found no stabilizing controls after {attempts} draws")]
    SamplingFailed { attempts: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoPreimageReason {
    /// The fixed-point iterate left the unit box.
    LeftBox,
    /// The iteration budget ran out.
    NotConverged,
    /// A root was found but it lies outside the simplex.
    OutsideSimplex,
}

impl std::fmt::Display for NoPreimageReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoPreimageReason::LeftBox => "iteration left the unit box",
            NoPreimageReason::NotConverged => "iteration did not converge",
            NoPreimageReason::OutsideSimplex => "root lies outside the simplex",
        })
    }
}
