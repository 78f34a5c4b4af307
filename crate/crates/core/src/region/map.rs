use nalgebra::{DMatrix, DVector};

use crate::error::NoPreimageReason;
use crate::sampling::{block_rng, simplex_face_point};
use crate::{ControlVector, Error, RateVector, Result};

/// Smallest finite-difference step accepted by [`jacobian_det_numeric`].
pub const MIN_FD_STEP: f64 = 1e-12;

/// Fixed-point sweeps before Newton steps are attempted in [`inverse_map`].
const NEWTON_WARMUP: usize = 20;

/// `∏_{j≠i} (1 − pⱼ)` for every `i`, by prefix and suffix products.
pub(crate) fn others_idle(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![1.0; n];
    let mut prefix = 1.0;
    for i in 0..n {
        out[i] = prefix;
        prefix *= 1.0 - p[i];
    }
    let mut suffix = 1.0;
    for i in (0..n).rev() {
        out[i] *= suffix;
        suffix *= 1.0 - p[i];
    }
    out
}

/// Worst-case service rates `pᵢ ∏_{j≠i}(1 − pⱼ)` on a raw slice.
///
/// Defined for any real input (the map is a polynomial), which the
/// finite-difference oracle relies on at the edges of the box.
pub fn service_rates(p: &[f64]) -> Vec<f64> {
    others_idle(p)
        .into_iter()
        .zip(p)
        .map(|(idle, &pi)| pi * idle)
        .collect()
}

pub fn forward_map(p: &ControlVector) -> RateVector {
    RateVector::from_vec_unchecked(service_rates(p))
}

fn idle_except_two(p: &[f64], a: usize, b: usize) -> f64 {
    p.iter()
        .enumerate()
        .filter(|&(j, _)| j != a && j != b)
        .map(|(_, &pj)| 1.0 - pj)
        .product()
}

/// Analytic Jacobian `∂xᵢ/∂pₖ` of the service-rate map.
pub fn rate_jacobian(p: &[f64]) -> DMatrix<f64> {
    let n = p.len();
    DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            idle_except_two(p, i, i)
        } else {
            -p[i] * idle_except_two(p, i, k)
        }
    })
}

/// `det J(p) = ρ(p)^{n−2} (1 − Σ pᵢ)`.
pub fn jacobian_det(p: &ControlVector) -> f64 {
    jacobian_det_raw(p)
}

pub(crate) fn jacobian_det_raw(p: &[f64]) -> f64 {
    let n = p.len() as i32;
    let idle: f64 = p.iter().map(|v| 1.0 - v).product();
    let total: f64 = p.iter().sum();
    idle.powi(n - 2) * (1.0 - total)
}

/// Determinant of the central finite-difference Jacobian of [`forward_map`].
pub fn jacobian_det_numeric(p: &ControlVector, h: f64) -> Result<f64> {
    if !(h.is_finite() && h >= MIN_FD_STEP) {
        return Err(Error::StepTooSmall(h));
    }
    let n = p.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = p.as_slice().to_vec();
    for k in 0..n {
        let base = probe[k];
        probe[k] = base + h;
        let plus = service_rates(&probe);
        probe[k] = base - h;
        let minus = service_rates(&probe);
        probe[k] = base;
        for i in 0..n {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(jac.determinant())
}

fn max_residual(p: &[f64], x: &[f64]) -> f64 {
    service_rates(p)
        .iter()
        .zip(x)
        .map(|(s, xi)| (s - xi).abs())
        .fold(0.0, f64::max)
}

/// One Newton step towards `service_rates(p) = x`; `None` if the system is
/// singular.
fn newton_candidate(p: &[f64], x: &[f64]) -> Option<Vec<f64>> {
    let rhs: Vec<f64> = x
        .iter()
        .zip(service_rates(p))
        .map(|(xi, s)| xi - s)
        .collect();
    let step = rate_jacobian(p).lu().solve(&DVector::from_vec(rhs))?;
    Some(p.iter().zip(step.iter()).map(|(a, d)| a + d).collect())
}

fn admissible(q: &[f64]) -> bool {
    q.iter().all(|v| (0.0..=1.0).contains(v)) && q.iter().sum::<f64>() <= 1.0 + 1e-12
}

/// Preimage in the simplex of a rate vector.
///
/// Runs the monotone fixed-point sweep `pᵢ ← xᵢ / ∏_{j≠i}(1 − pⱼ)` from
/// `p = x`, which increases towards the least fixed point whenever one
/// exists in the box. Newton steps take over once the sweep has warmed up
/// and are accepted only while they reduce the residual inside the simplex.
/// Zero rates get `pᵢ = 0`.
pub fn inverse_map(x: &RateVector, tol: f64, max_iter: usize) -> Result<ControlVector> {
    let n = x.dim();
    let support: Vec<usize> = (0..n).filter(|&i| x[i] > 0.0).collect();
    let xs: Vec<f64> = support.iter().map(|&i| x[i]).collect();

    let mut p = xs.clone();
    if p.iter().any(|&v| v > 1.0) {
        return Err(Error::NoPreimage(NoPreimageReason::LeftBox));
    }

    let mut converged = xs.is_empty();
    for k in 0..max_iter {
        if converged {
            break;
        }
        let residual = max_residual(&p, &xs);
        if residual <= tol {
            converged = true;
            break;
        }
        if k >= NEWTON_WARMUP {
            if let Some(q) = newton_candidate(&p, &xs) {
                if admissible(&q) && max_residual(&q, &xs) < residual {
                    p = q;
                    continue;
                }
            }
        }
        let idle = others_idle(&p);
        for i in 0..p.len() {
            p[i] = xs[i] / idle[i];
        }
        if p.iter().any(|&v| !(v <= 1.0)) {
            return Err(Error::NoPreimage(NoPreimageReason::LeftBox));
        }
    }
    if !converged {
        return Err(Error::NoPreimage(NoPreimageReason::NotConverged));
    }

    // Polish: keep taking Newton steps while they help.
    let mut residual = max_residual(&p, &xs);
    for _ in 0..12 {
        if residual == 0.0 {
            break;
        }
        let Some(q) = newton_candidate(&p, &xs) else {
            break;
        };
        let next = max_residual(&q, &xs);
        if !admissible(&q) || next > residual {
            break;
        }
        let moved = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = q;
        residual = next;
        if moved <= 1e-17 {
            break;
        }
    }

    if p.iter().sum::<f64>() > 1.0 + 1e-9 {
        return Err(Error::NoPreimage(NoPreimageReason::OutsideSimplex));
    }
    let mut full = vec![0.0; n];
    for (&i, &v) in support.iter().zip(&p) {
        full[i] = v.clamp(0.0, 1.0);
    }
    Ok(ControlVector::from_vec_unchecked(full))
}

/// Uniform control on the face `Σ pᵢ = 1` together with its image on `∂Λ`.
pub fn sample_boundary_point(n: usize, rng_seed: u64) -> Result<(ControlVector, RateVector)> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut rng = block_rng(rng_seed, 0);
    let p = ControlVector::new(simplex_face_point(&mut rng, n))?;
    let x = forward_map(&p);
    Ok((p, x))
}
