use aloha_core::region::{
    forward_map, inverse_map, jacobian_det, jacobian_det_numeric, membership_feasibility, membership_grid_oracle,
    sample_boundary_point, MembershipStatus, ROUND_TRIP_TOL,
};
use aloha_core::sampling::{block_rng, simplex_point, unit_cube_point};
use aloha_core::{ControlVector, RateVector};
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    // n+1 positive weights normalized give a point of the solid simplex
    prop::collection::vec(1e-6f64..1.0, n + 1).prop_map(|w| {
        let total: f64 = w.iter().sum();
        w[..w.len() - 1].iter().map(|v| v / total).collect()
    })
}

fn control(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn round_trip_recovers_control(p in (2usize..=5).prop_flat_map(simplex)) {
        let p = ControlVector::new(p).unwrap();
        let q = inverse_map(&forward_map(&p), 1e-15, 1_000_000).unwrap();
        for (a, b) in p.iter().zip(q.iter()) {
            prop_assert!((a - b).abs() <= ROUND_TRIP_TOL);
        }
    }

    #[test]
    fn total_service_never_exceeds_one(p in (2usize..=8).prop_flat_map(control)) {
        let x = forward_map(&ControlVector::new(p).unwrap());
        prop_assert!(x.sum() <= 1.0 + 1e-15);
    }

    #[test]
    fn jacobian_identity(p in (2usize..=4).prop_flat_map(simplex)) {
        let p = ControlVector::new(p).unwrap();
        let numeric = jacobian_det_numeric(&p, 1e-5).unwrap();
        prop_assert!((numeric - jacobian_det(&p)).abs() <= 1e-5);
    }

    #[test]
    fn coordinate_convexity(
        (p, shrink) in (2usize..=4).prop_flat_map(|n| (simplex(n), prop::collection::vec(0.0f64..=1.0, n)))
    ) {
        let x = forward_map(&ControlVector::new(p).unwrap());
        let smaller = RateVector::new(x.iter().zip(&shrink).map(|(a, s)| a * s).collect()).unwrap();
        prop_assert!(membership_feasibility(&x, 1e-9).is_member());
        prop_assert!(membership_feasibility(&smaller, 1e-9).is_member());
    }

    #[test]
    fn member_witness_satisfies_constraints(raw in (2usize..=4).prop_flat_map(simplex)) {
        let x = RateVector::new(raw).unwrap();
        let v = membership_feasibility(&x, 1e-9);
        if v.is_member() {
            let w = v.witness.unwrap();
            let s = forward_map(&w);
            for (xi, si) in x.iter().zip(s.iter()) {
                prop_assert!(*xi <= si * v.residual.max(0.0).exp() * (1.0 + 1e-12));
            }
        } else {
            prop_assert!(v.witness.is_none());
        }
    }
}

#[test]
fn images_of_simplex_are_members_and_outside_points_are_not() {
    let mut rng = block_rng(5, 0);
    for n in 2..=5 {
        for _ in 0..500 {
            let p = ControlVector::new(simplex_point(&mut rng, n)).unwrap();
            assert!(membership_feasibility(&forward_map(&p), 1e-9).is_member());
        }
        // Λ ⊆ 𝒮, so anything with Σx > 1 is outside
        let x = RateVector::constant(n, 1.1 / n as f64).unwrap();
        assert!(membership_feasibility(&x, 1e-9).is_non_member());
    }
}

#[test]
fn grid_oracle_agrees_on_unit_cube_points() {
    let steps = 200;
    let band = 2.0 / steps as f64;
    for n in 2..=3 {
        let mut rng = block_rng(17, n as u64);
        let mut compared = 0;
        for _ in 0..1000 {
            let raw = unit_cube_point(&mut rng, n);
            let lo = RateVector::new(raw.iter().map(|v| (v - band).max(0.0)).collect()).unwrap();
            let hi = RateVector::new(raw.iter().map(|v| v + band).collect()).unwrap();
            if membership_feasibility(&lo, 1e-9).is_member() && !membership_feasibility(&hi, 1e-9).is_non_member() {
                continue;
            }
            let x = RateVector::new(raw).unwrap();
            let solver = membership_feasibility(&x, 1e-9).status;
            let grid = membership_grid_oracle(&x, steps).status;
            assert_ne!(solver, MembershipStatus::Inconclusive);
            assert_eq!(solver, grid, "x = {:?}", x.as_slice());
            compared += 1;
        }
        assert!(compared > 500, "only {compared} points outside the band");
    }
}

#[test]
fn boundary_samples_lie_on_the_face() {
    for seed in 0..200 {
        let (p, x) = sample_boundary_point(4, seed).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-14);
        assert_eq!(forward_map(&p), x);
        assert!(membership_feasibility(&x, 1e-9).is_member());
        let outside = RateVector::new(x.iter().map(|v| v * 1.01).collect()).unwrap();
        assert!(membership_feasibility(&outside, 1e-9).is_non_member());
    }
    assert_eq!(sample_boundary_point(3, 9).unwrap(), sample_boundary_point(3, 9).unwrap());
}
