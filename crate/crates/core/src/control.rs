//! The set `𝒫(x) = {p ∈ [0,1]ⁿ : xᵢ ≤ pᵢ ∏_{j≠i}(1 − pⱼ) ∀i}` of controls
//! that stabilize `x` under worst-case service.
//!
//! `𝒫(x)` is non-empty iff `x ∈ Λ`, and it is convex: each constraint reads
//! `pᵢ ≥ fᵢ(p₋ᵢ)` with `fᵢ(p₋ᵢ) = xᵢ / ∏_{j≠i}(1 − pⱼ)` log-convex.

use rand::Rng;
use serde::Serialize;

use crate::region::{membership_feasibility, service_rates, MembershipVerdict};
use crate::sampling::{derive_seed, run_blocks};
use crate::{ControlVector, Error, RateVector, Result, ScanReport};

/// Guard keeping `1 − pⱼ` away from zero in the epigraph check.
pub const EPS_GUARD: f64 = 1e-9;

/// Shrink the proposal box once acceptance drops below this rate.
pub const MIN_ACCEPTANCE: f64 = 1e-3;

/// Relative slack for floating-point rounding in the epigraph check.
pub const ROUNDING_SLACK: f64 = 1e-12;

const PROPOSAL_BATCH: usize = 1 << 16;
const MAX_ROUNDS: u64 = 64;
const MIN_HALF_WIDTH: f64 = 1e-12;
const POOL_CAP: usize = 1 << 15;

pub const CONVEXITY_ID: &str = "control-set-convexity";
pub const EPIGRAPH_ID: &str = "control-epigraph-convexity";

fn check_dims(x: &RateVector, p: &ControlVector) -> Result<()> {
    if x.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: p.dim(),
        });
    }
    Ok(())
}

/// `xᵢ ≤ pᵢ ∏_{j≠i}(1 − pⱼ)` for every `i`.
pub fn control_member(x: &RateVector, p: &ControlVector) -> Result<bool> {
    check_dims(x, p)?;
    Ok(member_raw(x, p))
}

fn member_raw(x: &[f64], p: &[f64]) -> bool {
    x.iter().zip(service_rates(p)).all(|(&xi, si)| xi <= si)
}

/// `maxᵢ (xᵢ − sᵢ(p))`: non-positive iff `p ∈ 𝒫(x)`.
pub fn control_slack(x: &[f64], p: &[f64]) -> f64 {
    x.iter()
        .zip(service_rates(p))
        .map(|(&xi, si)| xi - si)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `fᵢ(p₋ᵢ) = xᵢ / ∏_{j≠i}(1 − pⱼ)`, where `p_minus_i` lists the other
/// `n − 1` controls. A zero product gives `+∞` (or 0 when `xᵢ = 0`).
pub fn constraint_threshold(x_i: f64, p_minus_i: &[f64]) -> f64 {
    let idle: f64 = p_minus_i.iter().map(|v| 1.0 - v).product();
    if x_i == 0.0 {
        0.0
    } else if idle <= 0.0 {
        f64::INFINITY
    } else {
        x_i / idle
    }
}

fn without(p: &[f64], i: usize) -> Vec<f64> {
    p.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .collect()
}

/// `p ∈ 𝒫(x)` evaluated as `pᵢ ≥ fᵢ(p₋ᵢ)` for every `i`.
pub fn control_member_by_thresholds(x: &RateVector, p: &ControlVector) -> Result<bool> {
    check_dims(x, p)?;
    Ok((0..x.dim()).all(|i| p[i] >= constraint_threshold(x[i], &without(p, i))))
}

/// Membership of `x` in `Λ` with a witness in `𝒫(x)`.
///
/// The status is exactly that of
/// [`membership_feasibility`](crate::region::membership_feasibility). The
/// solver's witness satisfies the constraints only up to the factor
/// `e^{residual}`; for members with room to spare it is replaced by the
/// witness for `x·e^{2 tol}`, which lies strictly inside `𝒫(x)`. Only points
/// within `tol` of `∂Λ` keep the approximate witness.
pub fn control_feasible(x: &RateVector, tol: f64) -> MembershipVerdict {
    let verdict = membership_feasibility(x, tol);
    let Some(w) = verdict.witness.as_ref().filter(|_| verdict.is_member()) else {
        return verdict;
    };
    if member_raw(x, w) {
        return verdict;
    }
    let inflated: Vec<f64> = x.iter().map(|v| v * (2.0 * tol).exp()).collect();
    if let Ok(bigger) = RateVector::new(inflated) {
        let v2 = membership_feasibility(&bigger, tol);
        if let Some(w2) = v2.witness.filter(|_| v2.status.eq(&crate::MembershipStatus::Member)) {
            if member_raw(x, &w2) {
                return MembershipVerdict {
                    residual: crate::region::feasibility_gap(x, &w2),
                    witness: Some(w2),
                    ..verdict
                };
            }
        }
    }
    verdict
}

/// A sample of controls classified against `𝒫(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlRegionSample {
    pub x: RateVector,
    pub members: Vec<ControlVector>,
    pub nonmembers: Vec<ControlVector>,
}

/// Classifies `count` uniform controls in `[0,1]ⁿ`.
pub fn sample_control_region(x: &RateVector, count: usize, seed: u64) -> ControlRegionSample {
    let n = x.dim();
    let parts = run_blocks(count, seed, |_, rng, k| {
        let mut members = Vec::new();
        let mut nonmembers = Vec::new();
        for _ in 0..k {
            let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            if member_raw(x, &p) {
                members.push(ControlVector::from_vec_unchecked(p));
            } else {
                nonmembers.push(ControlVector::from_vec_unchecked(p));
            }
        }
        (members, nonmembers)
    });
    let (mut members, mut nonmembers) = (Vec::new(), Vec::new());
    for (m, nm) in parts {
        members.extend(m);
        nonmembers.extend(nm);
    }
    ControlRegionSample {
        x: x.clone(),
        members,
        nonmembers,
    }
}

/// Members of `𝒫(x)` drawn from boxes `[w, w + h]` above the least element
/// `w`, shrinking `h` while acceptance stays below [`MIN_ACCEPTANCE`].
fn sample_members(x: &[f64], w: &[f64], want: usize, seed: u64) -> (Vec<Vec<f64>>, usize, usize) {
    let n = x.len();
    let mut half = 1.0;
    let mut pool: Vec<Vec<f64>> = Vec::new();
    let (mut proposed, mut accepted) = (0usize, 0usize);
    for round in 0..MAX_ROUNDS {
        if pool.len() >= want || half < MIN_HALF_WIDTH {
            break;
        }
        let found = run_blocks(PROPOSAL_BATCH, derive_seed(seed, round, 0), |_, rng, count| {
            let mut hits = Vec::new();
            for _ in 0..count {
                let p: Vec<f64> = (0..n)
                    .map(|j| {
                        let hi = (w[j] + half).min(1.0);
                        w[j] + (hi - w[j]) * rng.random::<f64>()
                    })
                    .collect();
                if member_raw(x, &p) {
                    hits.push(p);
                }
            }
            hits
        });
        let hits: usize = found.iter().map(Vec::len).sum();
        proposed += PROPOSAL_BATCH;
        accepted += hits;
        pool.extend(found.into_iter().flatten().take(want.saturating_sub(pool.len())));
        if (hits as f64) < MIN_ACCEPTANCE * PROPOSAL_BATCH as f64 {
            half *= 0.25;
        }
    }
    (pool, proposed, accepted)
}

/// Checks that `λp + (1 − λ)p′ ∈ 𝒫(x)` for `pairs` random member pairs and
/// uniform `λ`. The signed violation of a trial is `maxᵢ(xᵢ − sᵢ)` at the
/// combination.
///
/// When no member other than the witness can be found (for instance
/// `x = eᵢ`, where `𝒫(x) = {eᵢ}`) every pair is the witness itself.
pub fn convexity_probe(x: &RateVector, pairs: usize, seed: u64) -> Result<ScanReport> {
    if pairs == 0 {
        return Err(Error::InvalidArgument("pairs must be positive".into()));
    }
    let verdict = control_feasible(x, crate::region::DEFAULT_TOL);
    if !verdict.is_member() {
        return Err(Error::NotAMember("convexity probe needs x in the stability region"));
    }
    let w = verdict.witness.expect("members carry a witness").into_inner();
    let (mut pool, proposed, accepted) = sample_members(x, &w, (2 * pairs).min(POOL_CAP), seed);
    if pool.len() < 2 {
        if !member_raw(x, &w) {
            return Err(Error::SamplingFailed { attempts: proposed });
        }
        pool = vec![w.clone(), w];
    }
    let mut report = ScanReport::new(CONVEXITY_ID, x.dim(), 0.0, seed);
    report.acceptance_rate = Some(if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 });
    let parts = run_blocks(pairs, derive_seed(seed, u64::MAX, 1), |_, rng, count| {
        let mut part = ScanReport::new(CONVEXITY_ID, x.dim(), 0.0, seed);
        for _ in 0..count {
            let a = &pool[rng.random_range(0..pool.len())];
            let b = &pool[rng.random_range(0..pool.len())];
            let lambda: f64 = rng.random();
            let mix: Vec<f64> = a.iter().zip(b).map(|(u, v)| lambda * u + (1.0 - lambda) * v).collect();
            let slack = control_slack(x, &mix);
            part.record(slack, &mix);
        }
        part
    });
    for part in parts {
        report = report.merge(part);
    }
    Ok(report)
}

/// Feasible `p₂` interval `[x₂/(1 − p₁), 1 − x₁/p₁]` at a given `p₁`, or
/// `None` when it is empty.
pub fn feasible_interval(x: &RateVector, p1: f64) -> Result<Option<(f64, f64)>> {
    if x.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: x.dim(),
        });
    }
    if !(p1 > 0.0 && p1 <= 1.0) {
        return Ok(None);
    }
    let lower = if p1 < 1.0 {
        x[1] / (1.0 - p1)
    } else if x[1] == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let upper = 1.0 - x[0] / p1;
    Ok((lower <= upper).then_some((lower, upper)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundarySample {
    pub p1: f64,
    pub p2_lower: f64,
    pub p2_upper: f64,
}

/// Boundary of `𝒫(x)` for `n = 2` on `resolution` values of `p₁` evenly
/// spaced in `(x₁, 1]`; grid points with an empty interval are skipped.
pub fn trace_boundary_2d(x: &RateVector, resolution: usize) -> Result<Vec<BoundarySample>> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let mut out = Vec::new();
    for k in 1..=resolution {
        let p1 = x[0] + (1.0 - x[0]) * k as f64 / resolution as f64;
        if let Some((p2_lower, p2_upper)) = feasible_interval(x, p1)? {
            out.push(BoundarySample { p1, p2_lower, p2_upper });
        }
    }
    Ok(out)
}

/// Midpoint convexity of `fᵢ` and `log fᵢ` on random pairs in
/// `[0, 1 − ε]^{n−1}`. The signed violation of a trial is the larger of the
/// two relative midpoint gaps minus [`ROUNDING_SLACK`].
pub fn epigraph_convexity_check(x: &RateVector, i: usize, pairs: usize, seed: u64) -> Result<ScanReport> {
    let n = x.dim();
    if i >= n {
        return Err(Error::InvalidArgument(format!("index {i} out of range for n = {n}")));
    }
    if x[i] <= 0.0 {
        return Err(Error::OutOfDomain {
            index: i,
            value: x[i],
            domain: "(0, ∞)",
        });
    }
    if !control_feasible(x, crate::region::DEFAULT_TOL).is_member() {
        return Err(Error::NotAMember("epigraph check needs x in the stability region"));
    }
    let xi = x[i];
    let parts = run_blocks(pairs, seed, |_, rng, count| {
        let mut part = ScanReport::new(EPIGRAPH_ID, n, ROUNDING_SLACK, seed);
        let mut u = vec![0.0; n - 1];
        let mut v = vec![0.0; n - 1];
        for _ in 0..count {
            for (a, b) in u.iter_mut().zip(v.iter_mut()) {
                *a = (1.0 - EPS_GUARD) * rng.random::<f64>();
                *b = (1.0 - EPS_GUARD) * rng.random::<f64>();
            }
            let mid: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
            let (fu, fv, fm) = (
                constraint_threshold(xi, &u),
                constraint_threshold(xi, &v),
                constraint_threshold(xi, &mid),
            );
            let avg = 0.5 * (fu + fv);
            let gap = (fm - avg) / avg;
            let log_gap = fm.ln() - 0.5 * (fu.ln() + fv.ln());
            let scale = fm.ln().abs().max(1.0);
            part.record(gap.max(log_gap / scale) - ROUNDING_SLACK, &mid);
        }
        part
    });
    Ok(parts
        .into_iter()
        .fold(ScanReport::new(EPIGRAPH_ID, n, ROUNDING_SLACK, seed), ScanReport::merge))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(v: &[f64]) -> RateVector {
        RateVector::new(v.to_vec()).unwrap()
    }

    fn cv(v: &[f64]) -> ControlVector {
        ControlVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn membership_examples() {
        let x = rv(&[0.192, 0.052]);
        assert!(control_member(&x, &cv(&[0.3, 0.1])).unwrap());
        assert!(!control_member(&x, &cv(&[0.9, 0.9])).unwrap());
        assert!(control_member(&rv(&[0.0, 0.0, 0.0]), &cv(&[0.9, 0.1, 1.0])).unwrap());
        assert!(control_member(&x, &cv(&[0.3, 0.1, 0.0])).is_err());
    }

    #[test]
    fn feasible_examples() {
        let x = rv(&[0.192, 0.052]);
        let v = control_feasible(&x, 1e-9);
        assert!(v.is_member());
        assert!(control_member(&x, v.witness.as_ref().unwrap()).unwrap());
        assert!(control_feasible(&rv(&[0.6, 0.6]), 1e-9).is_non_member());
        let e = RateVector::unit(3, 2).unwrap();
        let v = control_feasible(&e, 1e-9);
        assert_eq!(v.witness.unwrap().as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn threshold_decomposition_matches() {
        let x = rv(&[0.1, 0.2, 0.05]);
        for p in [[0.2, 0.5, 0.1], [0.5, 0.3, 0.1], [0.0, 1.0, 0.3], [1.0, 0.0, 0.0]] {
            let p = cv(&p);
            assert_eq!(
                control_member(&x, &p).unwrap(),
                control_member_by_thresholds(&x, &p).unwrap()
            );
        }
    }

    #[test]
    fn convexity_probe_examples() {
        let r = convexity_probe(&rv(&[0.192, 0.052]), 10_000, 1).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.trials, 10_000);
        assert!(r.acceptance_rate.unwrap() > 0.0);
        let r = convexity_probe(&rv(&[0.2, 0.2]), 10_000, 2).unwrap();
        assert_eq!(r.violations, 0);
        let r = convexity_probe(&RateVector::unit(2, 0).unwrap(), 100, 3).unwrap();
        assert_eq!((r.trials, r.violations), (100, 0));
        assert!(matches!(convexity_probe(&rv(&[0.6, 0.6]), 10, 0), Err(Error::NotAMember(_))));
    }

    #[test]
    fn interval_examples() {
        let (lo, hi) = feasible_interval(&rv(&[0.192, 0.052]), 0.3).unwrap().unwrap();
        assert!((lo - 0.052 / 0.7).abs() < 1e-15);
        assert!((hi - 0.36).abs() < 1e-15);
        assert!(trace_boundary_2d(&rv(&[0.6, 0.6]), 1000).unwrap().is_empty());
        let t = trace_boundary_2d(&rv(&[0.25, 0.25]), 300).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!((t[0].p1, t[0].p2_lower, t[0].p2_upper), (0.5, 0.5, 0.5));
    }

    #[test]
    fn epigraph_examples() {
        let r = epigraph_convexity_check(&rv(&[0.1, 0.1]), 0, 10_000, 4).unwrap();
        assert_eq!(r.violations, 0);
        let r = epigraph_convexity_check(&rv(&[0.05, 0.1, 0.02]), 1, 10_000, 5).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.trials, 10_000);
        assert!(epigraph_convexity_check(&rv(&[0.0, 0.1]), 0, 10, 0).is_err());
    }
}
