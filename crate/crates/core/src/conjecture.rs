//! Numerical probes for the two open outer/inner bound conjectures.
//!
//! The scans can refute a conjecture but never prove it. Every report
//! carries signed margins so that near misses are visible.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{all_rates_equal_level, build_inner_ellipsoid, build_outer_ellipsoid, srs_member_raw, Ellipsoid};
use crate::region::{membership_feasibility, rate_jacobian, service_rates, MembershipStatus};
use crate::sampling::{block_rng, derive_seed, fill_simplex, fill_simplex_face, fill_unit_cube, run_blocks};
use crate::{ControlVector, Error, RateVector, Result, ScanReport};

/// Projected-gradient stopping threshold on the KKT residual.
pub const KKT_STOP: f64 = 1e-8;

/// Iteration cap per start in [`scan_conjecture_bc`].
pub const MAX_DESCENT_ITER: usize = 20_000;

const ARMIJO: f64 = 1e-4;

pub const BC_SCAN_ID: &str = "ball-complement-outer-bound";
pub const SANDWICH_SCAN_ID: &str = "ellipsoid-sandwich";

/// `f(p) = Σᵢ (1 − xᵢ(p))²`; the ball-complement conjecture is `f ≥ n − 1`
/// on `[0,1]ⁿ`.
pub fn f_objective(p: &ControlVector) -> f64 {
    f_raw(p)
}

fn f_raw(p: &[f64]) -> f64 {
    service_rates(p).iter().map(|x| (1.0 - x) * (1.0 - x)).sum()
}

/// Analytic gradient `∇f = −2 Jᵀ (𝟏 − x)`.
pub fn f_gradient(p: &ControlVector) -> Vec<f64> {
    gradient_raw(p)
}

fn gradient_raw(p: &[f64]) -> Vec<f64> {
    let x = service_rates(p);
    let j = rate_jacobian(p);
    let n = p.len();
    (0..n)
        .map(|k| -2.0 * (0..n).map(|i| (1.0 - x[i]) * j[(i, k)]).sum::<f64>())
        .collect()
}

/// First-order optimality residual for `min f` over `[0,1]ⁿ`: the Euclidean
/// norm of the gradient on free coordinates, of `min(0, gⱼ)` where
/// `pⱼ = 0` and of `max(0, gⱼ)` where `pⱼ = 1`.
pub fn kkt_residual(p: &[f64], grad: &[f64]) -> f64 {
    p.iter()
        .zip(grad)
        .map(|(&pj, &gj)| {
            let r = if pj <= 0.0 {
                gj.min(0.0)
            } else if pj >= 1.0 {
                gj.max(0.0)
            } else {
                gj
            };
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone)]
struct Descent {
    point: Vec<f64>,
    value: f64,
    kkt: f64,
}

/// Projected gradient descent on `[0,1]ⁿ` with Armijo backtracking.
fn projected_descent(mut p: Vec<f64>) -> Descent {
    let mut value = f_raw(&p);
    let mut step: f64 = 1.0;
    let mut grad = gradient_raw(&p);
    let mut kkt = kkt_residual(&p, &grad);
    let mut trial = vec![0.0; p.len()];
    for _ in 0..MAX_DESCENT_ITER {
        if kkt < KKT_STOP {
            break;
        }
        step = (step * 2.0).min(1.0);
        let mut moved = false;
        while step > 1e-16 {
            for ((t, &pj), &gj) in trial.iter_mut().zip(&p).zip(&grad) {
                *t = (pj - step * gj).clamp(0.0, 1.0);
            }
            let decrease: f64 = grad.iter().zip(&p).zip(&trial).map(|((g, a), b)| g * (a - b)).sum();
            let candidate = f_raw(&trial);
            if candidate <= value - ARMIJO * decrease {
                moved = decrease > 0.0;
                std::mem::swap(&mut p, &mut trial);
                value = candidate;
                break;
            }
            step *= 0.5;
        }
        grad = gradient_raw(&p);
        kkt = kkt_residual(&p, &grad);
        if !moved {
            break;
        }
    }
    Descent { point: p, value, kkt }
}

/// Multistart projected-gradient minimization of `f` from uniform starts in
/// `[0,1]ⁿ`. A trial's signed violation is `(n − 1) − f_min − tol`.
pub fn scan_conjecture_bc(n: usize, starts: usize, seed: u64, tol: f64) -> Result<ScanReport> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if starts == 0 {
        return Err(Error::InvalidArgument("at least one start is required".into()));
    }
    let runs: Vec<Descent> = (0..starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = block_rng(seed, s as u64);
            let mut p = vec![0.0; n];
            fill_unit_cube(&mut rng, &mut p);
            projected_descent(p)
        })
        .collect();
    let target = (n - 1) as f64;
    let mut report = ScanReport::new(BC_SCAN_ID, n, tol, seed);
    let mut best: Option<&Descent> = None;
    for run in &runs {
        report.record(target - run.value - tol, &run.point);
        if best.map_or(true, |b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("starts >= 1");
    report.min_value = Some(best.value);
    report.kkt_residual = Some(best.kkt);
    report.worst_point = best.point.clone();
    Ok(report)
}

/// `f` at the quasi-uniform vector with `k` entries equal to `1/k`.
pub fn quasi_uniform_value(n: usize, k: usize) -> f64 {
    let kf = k as f64;
    let x = (1.0 / kf) * (1.0 - 1.0 / kf).powi(k as i32 - 1);
    kf * (1.0 - x) * (1.0 - x) + (n - k) as f64
}

/// `(k, f)` for `k = 1..=n`.
pub fn quasi_uniform_values(n: usize) -> Result<Vec<(usize, f64)>> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    Ok((1..=n).map(|k| (k, quasi_uniform_value(n, k))).collect())
}

/// `(1 − 1/k)^{k−1}`, the chance that `k − 1` users at `p = 1/k` stay silent,
/// for `k = 2..=k_max`.
pub fn collision_free_sequence(k_max: usize) -> Vec<f64> {
    (2..=k_max)
        .map(|k| (1.0 - 1.0 / k as f64).powi(k as i32 - 1))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchySchwarzGap {
    pub bound: f64,
    pub target: f64,
}

/// Cauchy-Schwarz only yields `f ≥ (n−1)²/n`, short of `n − 1`.
pub fn cauchy_schwarz_gap(n: usize) -> Result<CauchySchwarzGap> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let nf = n as f64;
    Ok(CauchySchwarzGap {
        bound: (nf - 1.0) * (nf - 1.0) / nf,
        target: nf - 1.0,
    })
}

/// `quad_form − 1` for `E_I` and `E_O` at a tangency point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TangencyMargin {
    pub label: String,
    pub point: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
}

/// Margins at `eᵢ` and `m𝟏`, which lie on `∂Λ` and on both ellipsoids by
/// construction (`m𝟏` only on `E_I`).
pub fn tangency_point_margins(n: usize, c: f64) -> Result<Vec<TangencyMargin>> {
    let inner = build_inner_ellipsoid(n, c)?;
    let outer = build_outer_ellipsoid(n, c)?;
    let mut out: Vec<TangencyMargin> = (0..n)
        .map(|i| {
            let e = RateVector::unit(n, i).expect("n >= 2");
            TangencyMargin {
                label: format!("e{}", i + 1),
                inner: inner.quad(&e) - 1.0,
                outer: outer.quad(&e) - 1.0,
                point: e.into_inner(),
            }
        })
        .collect();
    let m = vec![all_rates_equal_level(n); n];
    out.push(TangencyMargin {
        label: "m1".into(),
        inner: inner.quad(&m) - 1.0,
        outer: outer.quad(&m) - 1.0,
        point: m,
    });
    Ok(out)
}

fn outer_violation(outer: &Ellipsoid, x: &[f64], tol: f64) -> f64 {
    (1.0 - tol) - outer.quad(x)
}

/// Two-sided probe of `Λ_I ⊆ Λ ⊆ Λ_O`.
///
/// Outer pass: `x = x(p)` for `p` uniform on the face `Σ p = 1` (so `x ∈ ∂Λ`)
/// and a coordinatewise shrink `x′ ≤ x`; each must satisfy
/// `quad_form(E_O, ·) ≥ 1 − tol`. Inner pass: `x` uniform in the simplex; each
/// certified non-member must satisfy `quad_form(E_I, x) ≤ 1 + tol`. Points in
/// `Λ_srs` are members and skipped; undecided points are counted in
/// `inconclusive`. The points `eᵢ` and `m𝟏` are always included.
pub fn sandwich_scan(n: usize, c: f64, samples: usize, seed: u64, tol: f64) -> Result<ScanReport> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let inner = build_inner_ellipsoid(n, c)?;
    let outer = build_outer_ellipsoid(n, c)?;
    let mut report = ScanReport::new(SANDWICH_SCAN_ID, n, tol, seed);

    for t in tangency_point_margins(n, c)? {
        if t.label != "m1" {
            report.record(-t.outer - tol, &t.point);
        }
        report.record(t.inner - tol, &t.point);
    }

    let outer_parts = run_blocks(samples, derive_seed(seed, 0, 0), |_, rng, count| {
        let mut part = ScanReport::new(SANDWICH_SCAN_ID, n, tol, seed);
        let mut p = vec![0.0; n];
        for _ in 0..count {
            fill_simplex_face(rng, &mut p);
            let x = service_rates(&p);
            part.record(outer_violation(&outer, &x, tol), &x);
            let shrunk: Vec<f64> = x.iter().map(|v| v * rng.random::<f64>()).collect();
            part.record(outer_violation(&outer, &shrunk, tol), &shrunk);
        }
        part
    });

    let inner_parts = run_blocks(samples, derive_seed(seed, 1, 0), |_, rng, count| {
        let mut part = ScanReport::new(SANDWICH_SCAN_ID, n, tol, seed);
        let mut x = vec![0.0; n];
        for _ in 0..count {
            fill_simplex(rng, &mut x);
            if srs_member_raw(&x) {
                continue;
            }
            let rv = RateVector::from_vec_unchecked(x.clone());
            match membership_feasibility(&rv, tol.min(1e-9)).status {
                MembershipStatus::NonMember => part.record(inner.quad(&x) - 1.0 - tol, &x),
                MembershipStatus::Inconclusive => part.inconclusive += 1,
                MembershipStatus::Member => {}
            }
        }
        part
    });

    for part in outer_parts.into_iter().chain(inner_parts) {
        report = report.merge(part);
    }
    Ok(report)
}
