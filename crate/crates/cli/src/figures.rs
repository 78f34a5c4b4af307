//! Boundary polylines for the two-user region plots.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use aloha_core::geometry::{build_inner_ellipsoid, build_outer_ellipsoid};
use aloha_core::{Ellipsoid, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub points: Vec<[f64; 2]>,
}

fn grid(resolution: usize) -> impl Iterator<Item = f64> {
    let steps = resolution.max(1);
    (0..=steps).map(move |k| k as f64 / steps as f64)
}

/// `∂Λ = {(t², (1−t)²)}`: the image of the face `p = (t, 1 − t)`.
pub fn lambda_boundary(resolution: usize) -> Curve {
    Curve {
        name: "lambda".into(),
        points: grid(resolution).map(|t| [t * t, (1.0 - t) * (1.0 - t)]).collect(),
    }
}

/// `√x₁ + √x₂ = 1`, parametrized by `√x₁ = s`.
pub fn srs_boundary(resolution: usize) -> Curve {
    Curve {
        name: "srs".into(),
        points: grid(resolution).map(|s| [s * s, (1.0 - s) * (1.0 - s)]).collect(),
    }
}

/// The quarter circle `‖x − 𝟏‖ = 1` inside the unit square.
pub fn bc_boundary(resolution: usize) -> Curve {
    Curve {
        name: "bc".into(),
        points: grid(resolution)
            .map(|s| {
                let theta = s * FRAC_PI_2;
                [1.0 - theta.cos(), 1.0 - theta.sin()]
            })
            .collect(),
    }
}

/// Part of `∂E` inside the simplex, traced from the axis parametrization
/// `c𝟏 + a₁cos θ·𝟏/√2 + a₂ sin θ·(1,−1)/√2`.
pub fn ellipse_boundary(name: &str, e: &Ellipsoid, resolution: usize) -> Curve {
    let (a1, a2) = (e.a1_sq.sqrt(), e.a2_sq.sqrt());
    let steps = 8 * resolution.max(1);
    let points = (0..steps)
        .map(|k| 2.0 * PI * k as f64 / steps as f64)
        .map(|theta| {
            let u = a1 * theta.cos() / SQRT_2;
            let v = a2 * theta.sin() / SQRT_2;
            [e.c + u + v, e.c + u - v]
        })
        .filter(|&[x1, x2]| x1 >= 0.0 && x2 >= 0.0 && x1 + x2 <= 1.0)
        .collect();
    Curve {
        name: name.into(),
        points,
    }
}

/// All boundary curves for the two-user plots at center `c`.
pub fn region_curves(c: f64, resolution: usize) -> Result<Vec<Curve>> {
    let inner = build_inner_ellipsoid(2, c)?;
    let outer = build_outer_ellipsoid(2, c)?;
    Ok(vec![
        lambda_boundary(resolution),
        srs_boundary(resolution),
        bc_boundary(resolution),
        ellipse_boundary("inner", &inner, resolution),
        ellipse_boundary("outer", &outer, resolution),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use aloha_core::region::membership_feasibility;
    use aloha_core::RateVector;

    #[test]
    fn lambda_boundary_points_are_on_the_boundary() {
        for [x1, x2] in lambda_boundary(50).points {
            assert!((x1.sqrt() + x2.sqrt() - 1.0).abs() < 1e-12);
            let x = RateVector::new(vec![x1, x2]).unwrap();
            assert!(membership_feasibility(&x, 1e-9).is_member());
        }
    }

    #[test]
    fn ellipse_points_are_on_the_ellipse() {
        for c in [0.55, 2.0] {
            for curve in region_curves(c, 100).unwrap().into_iter().skip(3) {
                assert!(!curve.points.is_empty(), "{} at c={c}", curve.name);
                let e = if curve.name == "inner" {
                    build_inner_ellipsoid(2, c).unwrap()
                } else {
                    build_outer_ellipsoid(2, c).unwrap()
                };
                for p in curve.points {
                    assert!((e.quad(&p) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ball_arc_has_unit_distance() {
        for [x1, x2] in bc_boundary(20).points {
            assert!(((1.0 - x1).powi(2) + (1.0 - x2).powi(2) - 1.0).abs() < 1e-12);
        }
    }
}
