//! Deterministic inputs shared by the benchmarks.

use aloha_core::region::forward_map;
use aloha_core::sampling::{block_rng, simplex_face_point, simplex_point};
use aloha_core::{ControlVector, RateVector};

/// Contention vectors drawn uniformly from the simplex.
pub fn controls(n: usize, count: usize, seed: u64) -> Vec<ControlVector> {
    let mut rng = block_rng(seed, 0);
    (0..count)
        .map(|_| ControlVector::new(simplex_point(&mut rng, n)).expect("simplex point is a control"))
        .collect()
}

/// Rate vectors split between clear members, near-boundary points and
/// clear non-members of the stability region.
pub fn rates(n: usize, count: usize, seed: u64) -> Vec<RateVector> {
    let mut rng = block_rng(seed, 1);
    (0..count)
        .map(|k| {
            let p = ControlVector::new(simplex_face_point(&mut rng, n)).expect("face point is a control");
            let scale = [0.5, 0.999, 1.3][k % 3];
            let x = forward_map(&p).iter().map(|v| v * scale).collect();
            RateVector::new(x).expect("scaled rates are non-negative")
        })
        .collect()
}
