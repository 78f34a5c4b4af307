//! Numerical toolkit for the worst-case slotted Aloha stability region.
//!
//! A rate vector `x` is stabilizable under worst-case service when some
//! contention vector `p ∈ [0,1]ⁿ` gives every user `i` a service rate
//! `pᵢ ∏_{j≠i} (1 − pⱼ)` of at least `xᵢ`. The set of such `x` is called
//! `Λ` throughout this crate. The modules cover:
//!
//! * [`region`]: the contention-to-rate map, its Jacobian and inverse, and
//!   membership tests for `Λ`.
//! * [`exact`]: exact rational volumes of `Λ` and of the square-root-sum
//!   inner bound.
//! * [`monte_carlo`]: seeded, thread-count independent volume estimators.
//! * [`geometry`]: the square-root-sum and ball-complement regions and the
//!   two diagonal-symmetric ellipsoids used as inner and outer bounds.
//! * [`conjecture`]: falsification scans for the outer-bound conjectures.
//! * [`control`]: the convex set of stabilizing contention vectors `𝒫(x)`.

// `!(v <= 1.0)` style checks are meant to catch NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conjecture;
pub mod control;
mod error;
pub mod exact;
pub mod geometry;
pub mod monte_carlo;
pub mod region;
mod report;
pub mod sampling;
mod vector;

pub use error::{Error, Result};
pub use report::ScanReport;
pub use vector::{ControlVector, RateVector};

pub use exact::{CompositionTerm, ExactRational};
pub use geometry::{Ellipsoid, EllipsoidKind, Hyperplane, Region};
pub use monte_carlo::McEstimate;
pub use region::{MembershipStatus, MembershipVerdict};

/// Crate version, embedded into every artifact the CLI writes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Name of the random number generator behind every seeded routine.
///
/// Each block of samples gets `ChaCha8Rng::seed_from_u64(seed)` with the
/// block index selected through `set_stream`, so results never depend on
/// the number of worker threads.
pub const RNG_ALGORITHM: &str = "ChaCha8 (seed_from_u64 + set_stream per block)";
