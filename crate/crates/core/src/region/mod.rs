//! The contention-to-rate map `x(p)` and membership in its image `Λ`.

mod map;
mod membership;

pub use map::{
    forward_map, inverse_map, jacobian_det, jacobian_det_numeric, rate_jacobian,
    sample_boundary_point, service_rates, MIN_FD_STEP,
};
pub(crate) use map::jacobian_det_raw;
pub use membership::{
    feasibility_gap, membership_feasibility, membership_feasibility_with, membership_grid_oracle,
    minimize_feasibility_gap, FeasibilityOptions, GapBounds, MembershipStatus, MembershipVerdict,
    BOX_GUARD, DEFAULT_TOL,
};

/// Default round-trip tolerance for [`inverse_map`].
pub const ROUND_TRIP_TOL: f64 = 1e-8;
