//! Closed-form bounds on `Λ`.
//!
//! * `Λ_srs = {x ≥ 0 : Σ √xᵢ ≤ 1}` (inner bound),
//! * `Λ_bc = {x ∈ [0,1]ⁿ : ‖x − 𝟏‖ ≥ √(n−1)}` (conjectured outer bound),
//! * `Λ_I = 𝒮 ∖ E_I` and `Λ_O = 𝒮 ∖ E_O` for two ellipsoids centred on the
//!   diagonal at `c𝟏`, with one semi-axis `a₁` along `𝟏` and a common
//!   semi-axis `a₂` in every orthogonal direction.
//!
//! For such an ellipsoid the inverse shape matrix is `ζ𝟙 + a₂⁻²I` with
//! `ζ = (a₁⁻² − a₂⁻²)/n`, so the quadratic form needs only `Σ dᵢ` and
//! `Σ dᵢ²` for `d = x − c𝟏`.

use serde::{Deserialize, Serialize};

use crate::region::{forward_map, service_rates};
use crate::{ControlVector, Error, RateVector, Result};

/// Slack used when classifying points against quadratic-form boundaries.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Allowed deviation of `Σ pᵢ` from 1 for controls on the simplex face.
pub const FACE_TOL: f64 = 1e-9;

/// Accepted deviation of the quadratic form from 1 for boundary points.
pub const ON_BOUNDARY_TOL: f64 = 1e-8;

pub fn srs_member(x: &RateVector) -> bool {
    srs_member_raw(x)
}

pub(crate) fn srs_member_raw(x: &[f64]) -> bool {
    x.iter().map(|v| v.sqrt()).sum::<f64>() <= 1.0
}

/// `‖x − 𝟏‖ ≥ √(n−1)`; points outside `[0,1]ⁿ` are rejected.
pub fn bc_member(x: &RateVector) -> Result<bool> {
    if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| **v > 1.0) {
        return Err(Error::OutOfDomain {
            index,
            value,
            domain: "[0, 1]",
        });
    }
    Ok(bc_member_raw(x))
}

pub(crate) fn bc_member_raw(x: &[f64]) -> bool {
    let n = x.len() as f64;
    let dist_sq: f64 = x.iter().map(|v| (v - 1.0) * (v - 1.0)).sum();
    dist_sq / (n - 1.0) >= 1.0 - BOUNDARY_TOL
}

pub(crate) fn in_simplex_raw(x: &[f64]) -> bool {
    x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= 1.0 + BOUNDARY_TOL
}

/// The all-rates-equal boundary level `m = (1/n)(1 − 1/n)^{n−1}`.
pub fn all_rates_equal_level(n: usize) -> f64 {
    let nf = n as f64;
    (1.0 / nf) * idle_share(n)
}

/// `(1 − 1/n)^{n−1}`, evaluated stably for large `n`.
fn idle_share(n: usize) -> f64 {
    let nf = n as f64;
    ((nf - 1.0) * (-1.0 / nf).ln_1p()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipsoidKind {
    Inner,
    Outer,
    Custom,
}

/// Ellipsoid `{x : (x − c𝟏)ᵀ R⁻¹ (x − c𝟏) ≤ 1}` with squared semi-axes
/// `a1_sq` along `𝟏/√n` and `a2_sq` in every orthogonal direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub n: usize,
    pub c: f64,
    pub a1_sq: f64,
    pub a2_sq: f64,
    pub kind: EllipsoidKind,
}

impl Ellipsoid {
    pub fn new(n: usize, c: f64, a1_sq: f64, a2_sq: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if !(a1_sq > 0.0 && a2_sq > 0.0 && a1_sq.is_finite() && a2_sq.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "semi-axes must be positive, got a1_sq = {a1_sq}, a2_sq = {a2_sq}"
            )));
        }
        Ok(Self {
            n,
            c,
            a1_sq,
            a2_sq,
            kind: EllipsoidKind::Custom,
        })
    }

    /// A ball of radius `r` centred at `c𝟏`.
    pub fn ball(n: usize, c: f64, r: f64) -> Result<Self> {
        Self::new(n, c, r * r, r * r)
    }

    pub fn zeta(&self) -> f64 {
        (1.0 / self.a1_sq - 1.0 / self.a2_sq) / self.n as f64
    }

    /// `(a₂/a₁)²`.
    pub fn axis_ratio_sq(&self) -> f64 {
        self.a2_sq / self.a1_sq
    }

    /// Quadratic form on a raw slice; the caller guarantees the dimension.
    pub fn quad(&self, x: &[f64]) -> f64 {
        let (sum, sum_sq) = x.iter().fold((0.0, 0.0), |(s, q), &xi| {
            let d = xi - self.c;
            (s + d, q + d * d)
        });
        self.zeta() * sum * sum + sum_sq / self.a2_sq
    }

    /// `R⁻¹ (x − c𝟏)`, the outward normal direction at `x`.
    pub fn shape_inverse_apply(&self, x: &[f64]) -> Vec<f64> {
        let sum: f64 = x.iter().map(|xi| xi - self.c).sum();
        let shift = self.zeta() * sum;
        x.iter().map(|xi| shift + (xi - self.c) / self.a2_sq).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.quad(x) <= 1.0
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got,
            });
        }
        Ok(())
    }
}

/// `(x − c𝟏)ᵀ R⁻¹ (x − c𝟏)` without forming any matrix.
pub fn quad_form(e: &Ellipsoid, x: &RateVector) -> Result<f64> {
    e.check_dim(x.dim())?;
    Ok(e.quad(x))
}

fn check_center(n: usize, c: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if !(c > 1.0 / n as f64 && c.is_finite()) {
        return Err(Error::InvalidCenter { n, c });
    }
    Ok(())
}

/// `a₂² = (n−1)a₁² / (n a₁² − (nc−1)²)`, the choice that puts every unit
/// vector on the ellipsoid boundary.
pub fn a2_sq_through_unit_vectors(n: usize, c: f64, a1_sq: f64) -> Result<f64> {
    let nf = n as f64;
    let denominator = nf * a1_sq - (nf * c - 1.0).powi(2);
    if !(denominator > 0.0) {
        return Err(Error::DegenerateEllipsoid { n, c, denominator });
    }
    Ok((nf - 1.0) * a1_sq / denominator)
}

/// `E_I`: through every `eᵢ` and through `m𝟏`, where `∂Λ` crosses the
/// diagonal.
pub fn build_inner_ellipsoid(n: usize, c: f64) -> Result<Ellipsoid> {
    check_center(n, c)?;
    let nf = n as f64;
    let a1_sq = nf * (c - all_rates_equal_level(n)).powi(2);
    let a2_sq = a2_sq_through_unit_vectors(n, c, a1_sq)?;
    Ok(Ellipsoid {
        kind: EllipsoidKind::Inner,
        ..Ellipsoid::new(n, c, a1_sq, a2_sq)?
    })
}

/// `E_O`: through every `eᵢ` and tangent to `∂Λ` there; a ball when `c = 1`.
pub fn build_outer_ellipsoid(n: usize, c: f64) -> Result<Ellipsoid> {
    check_center(n, c)?;
    let nf = n as f64;
    Ok(Ellipsoid {
        kind: EllipsoidKind::Outer,
        ..Ellipsoid::new(n, c, (nf * c - 1.0) * c, (nf - 1.0) * c)?
    })
}

/// `{x : ⟨normal, x⟩ = offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    /// `⟨normal, x⟩ − offset`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn check_face(p: &ControlVector) -> Result<()> {
    let sum = p.sum();
    if (sum - 1.0).abs() > FACE_TOL {
        return Err(Error::NotOnSimplexFace(sum));
    }
    Ok(())
}

/// Tangent plane `⟨𝟏 − p_t, x⟩ = ρ(p_t)` of `∂Λ` at `x(p_t)`.
pub fn lambda_tangent_hyperplane(p_t: &ControlVector) -> Result<Hyperplane> {
    check_face(p_t)?;
    Ok(Hyperplane {
        normal: p_t.iter().map(|v| 1.0 - v).collect(),
        offset: p_t.idle_probability(),
    })
}

/// Tangent plane of `∂E` at `x_t`, normalized so that the last normal
/// component is `−1`.
///
/// When that component vanishes the plane is returned unnormalized inside
/// [`Error::NormalizationSingular`].
pub fn ellipsoid_tangent_hyperplane(e: &Ellipsoid, x_t: &RateVector) -> Result<Hyperplane> {
    e.check_dim(x_t.dim())?;
    let q = e.quad(x_t);
    if (q - 1.0).abs() > ON_BOUNDARY_TOL {
        return Err(Error::NotOnBoundary(q));
    }
    let v = e.shape_inverse_apply(x_t);
    let last = v[e.n - 1];
    let scale = v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if last.abs() <= 1e-12 * scale {
        let offset = dot(&v, x_t);
        return Err(Error::NormalizationSingular(Hyperplane { normal: v, offset }));
    }
    let normal: Vec<f64> = v.iter().map(|c| -c / last).collect();
    let offset = dot(&normal, x_t);
    Ok(Hyperplane { normal, offset })
}

/// `1 − |cos θ|` between the normal `𝟏 − p_t` of `∂Λ` and the normal
/// `R⁻¹(x_t − c𝟏)` of `∂E` at `x_t = x(p_t)`; zero iff they are parallel.
///
/// Evaluated as `‖û ∓ v̂‖²/2` so that near-parallel normals keep full
/// relative precision.
pub fn tangency_residual(e: &Ellipsoid, p_t: &ControlVector) -> Result<f64> {
    e.check_dim(p_t.dim())?;
    check_face(p_t)?;
    let u: Vec<f64> = p_t.iter().map(|v| 1.0 - v).collect();
    let x_t = service_rates(p_t);
    let v = e.shape_inverse_apply(&x_t);
    let nu = dot(&u, &u).sqrt();
    let nv = dot(&v, &v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(1.0);
    }
    let sign = if dot(&u, &v) >= 0.0 { 1.0 } else { -1.0 };
    let gap: f64 = u
        .iter()
        .zip(&v)
        .map(|(a, b)| {
            let d = a / nu - sign * b / nv;
            d * d
        })
        .sum();
    Ok(0.5 * gap)
}

/// Right-hand side of the componentwise common-tangency condition
///
/// `(a₂/a₁)² = [(q_i − q_n) Σx + n(q_n x_i − q_i x_n)] / [(q_i − q_n)(Σx − nc)]`
///
/// for `i` in `0..n−1`, with `q = 𝟏 − p_t` and `x = x(p_t)`. Entries whose
/// denominator vanishes (for instance every entry at a symmetric point) are
/// `None`.
pub fn tangency_ratio_condition(e: &Ellipsoid, p_t: &ControlVector) -> Result<Vec<Option<f64>>> {
    e.check_dim(p_t.dim())?;
    check_face(p_t)?;
    let n = e.n;
    let nf = n as f64;
    let q: Vec<f64> = p_t.iter().map(|v| 1.0 - v).collect();
    let x = forward_map(p_t);
    let total = x.sum();
    Ok((0..n - 1)
        .map(|i| {
            let dq = q[i] - q[n - 1];
            let den = dq * (total - nf * e.c);
            if den.abs() < 1e-14 {
                return None;
            }
            let num = dq * total + nf * (q[n - 1] * x[i] - q[i] * x[n - 1]);
            Some(num / den)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRatios {
    /// `a²₁,I / a²₁,O` at the given `c`.
    pub r1: f64,
    /// `a²₂,I / a²₂,O` at the given `c`.
    pub r2: f64,
    /// `lim_{c→∞} r2 = 1 / (2(1 − (1 − 1/n)^{n−1}))`.
    pub r2_limit: f64,
}

pub fn r2_limit(n: usize) -> f64 {
    1.0 / (2.0 * (1.0 - idle_share(n)))
}

pub fn axis_ratio_limits(n: usize, c: f64) -> Result<AxisRatios> {
    let inner = build_inner_ellipsoid(n, c)?;
    let outer = build_outer_ellipsoid(n, c)?;
    Ok(AxisRatios {
        r1: inner.a1_sq / outer.a1_sq,
        r2: inner.a2_sq / outer.a2_sq,
        r2_limit: r2_limit(n),
    })
}

/// Regions with cheap membership tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Srs,
    Bc,
    /// `Λ_I = 𝒮 ∖ E_I`.
    InnerEllipsoidRegion { ellipsoid: Ellipsoid },
    /// `Λ_O = 𝒮 ∖ E_O`.
    OuterEllipsoidRegion { ellipsoid: Ellipsoid },
}

impl Region {
    pub fn inner(n: usize, c: f64) -> Result<Self> {
        Ok(Region::InnerEllipsoidRegion {
            ellipsoid: build_inner_ellipsoid(n, c)?,
        })
    }

    pub fn outer(n: usize, c: f64) -> Result<Self> {
        Ok(Region::OuterEllipsoidRegion {
            ellipsoid: build_outer_ellipsoid(n, c)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Region::Srs => "srs",
            Region::Bc => "bc",
            Region::InnerEllipsoidRegion { .. } => "inner",
            Region::OuterEllipsoidRegion { .. } => "outer",
        }
    }

    /// Membership on a raw slice. Points on an ellipsoid boundary (within
    /// [`BOUNDARY_TOL`]) belong to the region.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Srs => srs_member_raw(x),
            Region::Bc => x.iter().all(|&v| (0.0..=1.0).contains(&v)) && bc_member_raw(x),
            Region::InnerEllipsoidRegion { ellipsoid } | Region::OuterEllipsoidRegion { ellipsoid } => {
                in_simplex_raw(x) && ellipsoid.quad(x) >= 1.0 - BOUNDARY_TOL
            }
        }
    }
}

pub fn region_member(region: &Region, x: &RateVector) -> bool {
    region.contains(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(v: &[f64]) -> RateVector {
        RateVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn square_root_sum_examples() {
        assert!(srs_member(&rv(&[0.25, 0.25])));
        assert!(srs_member(&rv(&[1.0, 0.0, 0.0])));
        assert!(!srs_member(&rv(&[0.3, 0.3])));
    }

    #[test]
    fn ball_complement_examples() {
        for n in 2..6 {
            assert!(bc_member(&RateVector::unit(n, 0).unwrap()).unwrap());
            assert!(bc_member(&RateVector::zeros(n).unwrap()).unwrap());
            assert!(!bc_member(&RateVector::constant(n, 1.0).unwrap()).unwrap());
        }
        assert!(bc_member(&rv(&[1.5, 0.0])).is_err());
    }

    #[test]
    fn inner_ellipsoid_n2_c1() {
        let e = build_inner_ellipsoid(2, 1.0).unwrap();
        assert!((e.a1_sq - 9.0 / 8.0).abs() < 1e-15);
        assert!((e.a2_sq - 9.0 / 10.0).abs() < 1e-15);
        assert!((e.zeta() + 1.0 / 9.0).abs() < 1e-15);
        assert!((quad_form(&e, &rv(&[1.0, 0.0])).unwrap() - 1.0).abs() < 1e-12);
        assert!((quad_form(&e, &rv(&[0.0, 0.0])).unwrap() - 16.0 / 9.0).abs() < 1e-12);
        assert_eq!(e.quad(&[1.0, 1.0]), 0.0);
    }

    #[test]
    fn outer_ellipsoid_examples() {
        let e = build_outer_ellipsoid(2, 1.0).unwrap();
        assert_eq!((e.a1_sq, e.a2_sq), (1.0, 1.0));
        let e = build_outer_ellipsoid(3, 2.0).unwrap();
        assert_eq!((e.a1_sq, e.a2_sq), (10.0, 4.0));
        assert!(build_outer_ellipsoid(2, 0.5).is_err());
        assert!(matches!(build_inner_ellipsoid(3, 0.2), Err(Error::InvalidCenter { .. })));
    }

    #[test]
    fn degenerate_semi_axis_is_reported() {
        // a₁ below √n(c − 1/n) makes the a₂ denominator non-positive
        let err = a2_sq_through_unit_vectors(2, 1.0, 0.4).unwrap_err();
        assert!(matches!(err, Error::DegenerateEllipsoid { .. }));
    }

    #[test]
    fn sphere_quad_form_is_scaled_distance() {
        let e = Ellipsoid::ball(3, 0.7, 1.3).unwrap();
        let x = [0.1, 0.4, 0.2];
        let dist_sq: f64 = x.iter().map(|v| (v - 0.7) * (v - 0.7)).sum();
        assert!((e.quad(&x) - dist_sq / 1.69).abs() < 1e-15);
    }

    #[test]
    fn lambda_tangent_plane_examples() {
        let p = ControlVector::new(vec![0.5, 0.5]).unwrap();
        let h = lambda_tangent_hyperplane(&p).unwrap();
        assert_eq!(h.normal, vec![0.5, 0.5]);
        assert_eq!(h.offset, 0.25);
        assert_eq!(h.evaluate(&[0.25, 0.25]), 0.0);

        let e1 = ControlVector::unit(3, 1).unwrap();
        let h = lambda_tangent_hyperplane(&e1).unwrap();
        assert_eq!(h.normal, vec![1.0, 0.0, 1.0]);
        assert_eq!(h.offset, 0.0);
        assert_eq!(h.evaluate(&[0.0, 1.0, 0.0]), 0.0);

        let off = ControlVector::new(vec![0.2, 0.2]).unwrap();
        assert!(matches!(lambda_tangent_hyperplane(&off), Err(Error::NotOnSimplexFace(_))));
    }

    #[test]
    fn ellipsoid_tangent_plane_examples() {
        let inner = build_inner_ellipsoid(2, 1.0).unwrap();
        let h = ellipsoid_tangent_hyperplane(&inner, &rv(&[0.25, 0.25])).unwrap();
        assert!((h.normal[0] - h.normal[1]).abs() < 1e-12);

        let outer = build_outer_ellipsoid(2, 1.0).unwrap();
        let h = ellipsoid_tangent_hyperplane(&outer, &rv(&[1.0, 0.0])).unwrap();
        assert_eq!(h.normal, vec![0.0, -1.0]);
        assert_eq!(h.offset, 0.0);

        // at e₂ the last component of R⁻¹(x − c𝟏) vanishes for the unit ball
        let err = ellipsoid_tangent_hyperplane(&outer, &rv(&[0.0, 1.0])).unwrap_err();
        match err {
            Error::NormalizationSingular(plane) => assert_eq!(plane.normal, vec![-1.0, 0.0]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            ellipsoid_tangent_hyperplane(&outer, &rv(&[0.2, 0.2])),
            Err(Error::NotOnBoundary(_))
        ));
    }

    #[test]
    fn tangency_at_designated_points() {
        for n in 2..=6 {
            for c in [0.55, 1.0, 2.0, 100.0] {
                if c <= 1.0 / n as f64 {
                    continue;
                }
                let inner = build_inner_ellipsoid(n, c).unwrap();
                let mid = ControlVector::constant(n, 1.0 / n as f64).unwrap();
                assert!(tangency_residual(&inner, &mid).unwrap() <= 1e-10);
                let outer = build_outer_ellipsoid(n, c).unwrap();
                for i in 0..n {
                    let e = ControlVector::unit(n, i).unwrap();
                    assert!(tangency_residual(&outer, &e).unwrap() <= 1e-10);
                }
            }
        }
        let outer = build_outer_ellipsoid(3, 2.0).unwrap();
        let generic = ControlVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert!(tangency_residual(&outer, &generic).unwrap() > 1e-6);
    }

    #[test]
    fn componentwise_condition_holds_at_outer_tangency() {
        for n in 2..=5 {
            let outer = build_outer_ellipsoid(n, 2.0).unwrap();
            let e0 = ControlVector::unit(n, 0).unwrap();
            let ratios = tangency_ratio_condition(&outer, &e0).unwrap();
            let first = ratios[0].expect("well-defined at e₁");
            assert!((first - outer.axis_ratio_sq()).abs() < 1e-12);
            assert!(ratios[1..].iter().all(Option::is_none));
        }
        let inner = build_inner_ellipsoid(3, 2.0).unwrap();
        let mid = ControlVector::constant(3, 1.0 / 3.0).unwrap();
        assert!(tangency_ratio_condition(&inner, &mid).unwrap().iter().all(Option::is_none));
    }

    #[test]
    fn axis_ratio_examples() {
        assert_eq!(r2_limit(2), 1.0);
        let e = std::f64::consts::E;
        assert!((r2_limit(1_000_000) - e / (2.0 * (e - 1.0))).abs() < 1e-4);
        let r = axis_ratio_limits(3, 1e6).unwrap();
        assert!((r.r1 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn region_membership_examples() {
        let inner = Region::inner(2, 1.0).unwrap();
        assert!(region_member(&inner, &rv(&[0.0, 0.0])));
        let m = all_rates_equal_level(2);
        assert!(!region_member(&inner, &rv(&[m + 1e-3, m + 1e-3])));
        assert!(!region_member(&inner, &rv(&[0.7, 0.7])));
        assert!(!region_member(&Region::outer(2, 1.0).unwrap(), &rv(&[0.9, 0.2])));
        assert!(region_member(&Region::Srs, &rv(&[0.25, 0.25])));
        assert!(!region_member(&Region::Bc, &rv(&[1.0, 1.0])));
    }

    #[test]
    fn ellipsoid_json_shape() {
        let e = build_outer_ellipsoid(3, 2.0).unwrap();
        let json = serde_json::to_value(&e).unwrap();
        assert_eq!(json["kind"], "outer");
        assert_eq!(json["a1_sq"], 10.0);
        assert_eq!(json["n"], 3);
    }
}
