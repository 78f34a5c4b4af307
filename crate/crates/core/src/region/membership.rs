use rand::Rng;
use serde::{Deserialize, Serialize};

use super::map::{others_idle, service_rates};
use crate::sampling::block_rng;
use crate::{ControlVector, RateVector};

/// Box guard for the projected subgradient stage.
pub const BOX_GUARD: f64 = 1e-12;

/// Default log-residual tolerance for membership decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipStatus {
    Member,
    NonMember,
    Inconclusive,
}

impl MembershipStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MembershipStatus::Member => "member",
            MembershipStatus::NonMember => "non-member",
            MembershipStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Outcome of a membership test.
///
/// `residual` is the feasibility gap `G(p) = maxᵢ log(xᵢ / sᵢ(p))` at the
/// best control found, where `sᵢ` is the worst-case service rate. For a
/// member the witness satisfies `xᵢ ≤ sᵢ(witness)·e^{residual}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub status: MembershipStatus,
    pub witness: Option<ControlVector>,
    pub residual: f64,
}

impl MembershipVerdict {
    pub fn is_member(&self) -> bool {
        self.status == MembershipStatus::Member
    }

    pub fn is_non_member(&self) -> bool {
        self.status == MembershipStatus::NonMember
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityOptions {
    pub tol: f64,
    /// Budget for the monotone fixed-point sweep.
    pub max_iter: usize,
    /// Starts for the projected subgradient fallback.
    pub starts: usize,
    pub subgradient_iter: usize,
    pub seed: u64,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: 1_000_000,
            starts: 8,
            subgradient_iter: 4_000,
            seed: 0x5eed,
        }
    }
}

/// `G(p) = max_{i: xᵢ>0} (log xᵢ − log pᵢ − Σ_{j≠i} log(1 − pⱼ))`.
///
/// Convex on `(0,1)ⁿ`; `x` is stabilized by `p` iff `G(p) ≤ 0`. Returns
/// `-inf` when every rate is zero.
pub fn feasibility_gap(x: &[f64], p: &[f64]) -> f64 {
    let s = service_rates(p);
    x.iter()
        .zip(&s)
        .filter(|(&xi, _)| xi > 0.0)
        .map(|(&xi, &si)| if si > 0.0 { (xi / si).ln() } else { f64::INFINITY })
        .fold(f64::NEG_INFINITY, f64::max)
}

enum Sweep {
    /// Gap of the unscaled rates dropped to the tolerance at this iterate.
    Converged(Vec<f64>),
    /// An iterate left the unit box: the scaled rates are not in the region.
    Escaped { best_gap: f64 },
    Stalled { last: Vec<f64>, best_gap: f64 },
}

/// Monotone sweep `p ← T(p)` with `T(p)ᵢ = yᵢ / ∏_{j≠i}(1−pⱼ)` on
/// `y = scale·xs`, started from `p = y`.
///
/// `T` is increasing, and any `w` with `T(w) ≤ w` bounds every iterate from
/// above, so leaving the box proves that no stabilizing control exists for
/// `y`. Convergence is declared once `G_x(p) ≤ stop_gap`.
fn monotone_sweep(xs: &[f64], scale: f64, stop_gap: f64, max_iter: usize) -> Sweep {
    let y: Vec<f64> = xs.iter().map(|v| v * scale).collect();
    let shift = -scale.ln();
    let mut p = y.clone();
    let mut best_gap = f64::INFINITY;
    if p.iter().any(|&v| v > 1.0) {
        return Sweep::Escaped { best_gap };
    }
    for _ in 0..max_iter {
        let idle = others_idle(&p);
        let mut gap_y = f64::NEG_INFINITY;
        let mut escaped = false;
        let next: Vec<f64> = y
            .iter()
            .zip(&idle)
            .zip(&p)
            .map(|((&yi, &idle_i), &pi)| {
                let v = yi / idle_i;
                gap_y = gap_y.max((v / pi).ln());
                escaped |= !(v <= 1.0);
                v
            })
            .collect();
        // gap of the original rates at p: G_x(p) = G_y(p) + log(1/scale)
        let gap_x = gap_y + shift;
        best_gap = best_gap.min(gap_x);
        if gap_x <= stop_gap {
            return Sweep::Converged(p);
        }
        if escaped {
            return Sweep::Escaped { best_gap };
        }
        p = next;
    }
    Sweep::Stalled { last: p, best_gap }
}

fn expand(support: &[usize], n: usize, reduced: &[f64]) -> ControlVector {
    let mut full = vec![0.0; n];
    for (&i, &v) in support.iter().zip(reduced) {
        full[i] = v.clamp(0.0, 1.0);
    }
    ControlVector::from_vec_unchecked(full)
}

/// Decides `x ∈ Λ` with default options and the given tolerance.
pub fn membership_feasibility(x: &RateVector, tol: f64) -> MembershipVerdict {
    membership_feasibility_with(
        x,
        &FeasibilityOptions {
            tol,
            ..FeasibilityOptions::default()
        },
    )
}

/// Decides whether `min_p G(p) ≤ tol`.
///
/// Zero rates are dropped (their constraints hold with `pᵢ = 0`). The
/// monotone sweep settles almost every point: run on `x·e^{−tol/2}` it
/// either reaches a control with gap at most `tol`, or it leaves the box and
/// a second run on `x·e^{−tol}` decides the band: leaving the box again
/// certifies `min G > tol`, converging yields a witness with gap below
/// `2·tol` for a point whose `min G` is at most `tol`. Points the sweep
/// cannot settle within budget go to a multistart projected subgradient
/// search whose dual bound may still certify non-membership; otherwise the
/// verdict is inconclusive.
pub fn membership_feasibility_with(x: &RateVector, opts: &FeasibilityOptions) -> MembershipVerdict {
    let n = x.dim();
    let tol = opts.tol;
    let support: Vec<usize> = (0..n).filter(|&i| x[i] > 0.0).collect();
    if support.is_empty() {
        return MembershipVerdict {
            status: MembershipStatus::Member,
            witness: Some(ControlVector::from_vec_unchecked(vec![0.0; n])),
            residual: f64::NEG_INFINITY,
        };
    }
    let xs: Vec<f64> = support.iter().map(|&i| x[i]).collect();

    let member = |p: &[f64]| MembershipVerdict {
        status: MembershipStatus::Member,
        witness: Some(expand(&support, n, p)),
        residual: feasibility_gap(&xs, p),
    };

    // A lone active user only needs pᵢ ≥ xᵢ.
    if let [xi] = xs[..] {
        let p = [xi.min(1.0)];
        if feasibility_gap(&xs, &p) <= tol {
            return member(&p);
        }
        return MembershipVerdict {
            status: MembershipStatus::NonMember,
            witness: None,
            residual: feasibility_gap(&xs, &p),
        };
    }

    // First pass on x·e^{−tol/2}: convergence there leaves gap at most tol.
    let stalled_at: Option<Vec<f64>>;
    let best_gap;
    match monotone_sweep(&xs, (-0.5 * tol).exp(), tol, opts.max_iter) {
        Sweep::Converged(p) => return member(&p),
        Sweep::Stalled { last, best_gap: g } => {
            best_gap = g;
            stalled_at = Some(last);
        }
        Sweep::Escaped { best_gap: g } => {
            best_gap = g;
            // min G > tol/2; the pass on x·e^{−tol} settles the band.
            match monotone_sweep(&xs, (-tol).exp(), 2.0 * tol, opts.max_iter) {
                Sweep::Converged(p) => return member(&p),
                Sweep::Escaped { .. } => {
                    return MembershipVerdict {
                        status: MembershipStatus::NonMember,
                        witness: None,
                        residual: best_gap,
                    };
                }
                Sweep::Stalled { last, .. } => stalled_at = Some(last),
            }
        }
    }

    let bounds = minimize_gap_reduced(&xs, stalled_at.as_deref(), opts);
    if bounds.best_value <= tol {
        return member(&bounds.best_point);
    }
    if bounds.lower_bound > tol {
        return MembershipVerdict {
            status: MembershipStatus::NonMember,
            witness: None,
            residual: bounds.best_value.min(best_gap),
        };
    }
    MembershipVerdict {
        status: MembershipStatus::Inconclusive,
        witness: None,
        residual: bounds.best_value.min(best_gap),
    }
}

/// Result of the projected subgradient search on `G`.
#[derive(Debug, Clone)]
pub struct GapBounds {
    pub best_point: Vec<f64>,
    /// Smallest `G` seen (an upper bound on `min G`).
    pub best_value: f64,
    /// Certified lower bound on `min G` over the guarded box.
    pub lower_bound: f64,
}

/// Multistart projected subgradient on `G` over `[ε, 1−ε]ⁿ` with a dual
/// lower bound. Rates must be positive.
pub fn minimize_feasibility_gap(x: &[f64], opts: &FeasibilityOptions) -> GapBounds {
    minimize_gap_reduced(x, None, opts)
}

fn gaps_and_grads(x: &[f64], p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s = service_rates(p);
    let gaps = x.iter().zip(&s).map(|(xi, si)| (xi / si).ln()).collect();
    // ∂gᵢ/∂pᵢ = −1/pᵢ and ∂gᵢ/∂pⱼ = 1/(1−pⱼ) for j ≠ i
    let inv_idle = p.iter().map(|v| 1.0 / (1.0 - v)).collect();
    (gaps, inv_idle)
}

/// Lower bound `Σλᵢgᵢ(p̂) + min_{p∈box} ⟨Σλᵢ∇gᵢ(p̂), p − p̂⟩` and its
/// supergradient in `λ`.
fn dual_bound(x: &[f64], p: &[f64], lambda: &[f64]) -> (f64, Vec<f64>) {
    let (gaps, inv_idle) = gaps_and_grads(x, p);
    let n = p.len();
    let lambda_sum: f64 = lambda.iter().sum();
    let mut endpoint = vec![0.0; n];
    let mut bound: f64 = lambda.iter().zip(&gaps).map(|(l, g)| l * g).sum();
    for j in 0..n {
        let d = -lambda[j] / p[j] + (lambda_sum - lambda[j]) * inv_idle[j];
        let lo = d * (BOX_GUARD - p[j]);
        let hi = d * (1.0 - BOX_GUARD - p[j]);
        if lo <= hi {
            endpoint[j] = BOX_GUARD;
            bound += lo;
        } else {
            endpoint[j] = 1.0 - BOX_GUARD;
            bound += hi;
        }
    }
    let displacement: f64 = (0..n).map(|j| (endpoint[j] - p[j]) * inv_idle[j]).sum();
    let sup: Vec<f64> = (0..n)
        .map(|i| {
            let own = (endpoint[i] - p[i]) * inv_idle[i];
            gaps[i] - (endpoint[i] - p[i]) / p[i] + displacement - own
        })
        .collect();
    (bound, sup)
}

/// Best dual bound reachable from `p̂` by exponentiated-gradient ascent in
/// `λ`, started at `λ ∝ p̂` (the stationary weights on the simplex face).
fn best_dual_bound(x: &[f64], p: &[f64]) -> f64 {
    let n = p.len();
    let total: f64 = p.iter().sum();
    let mut lambda: Vec<f64> = p.iter().map(|v| v / total).collect();
    let mut best = f64::NEG_INFINITY;
    for k in 0..300 {
        let (bound, sup) = dual_bound(x, p, &lambda);
        if bound.is_finite() {
            best = best.max(bound);
        }
        let scale = sup.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let eta = 0.5 / (scale * ((k + 1) as f64).sqrt());
        for i in 0..n {
            lambda[i] *= (eta * sup[i]).exp();
            lambda[i] = lambda[i].max(1e-300);
        }
        let z: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|l| *l /= z);
    }
    best
}

fn minimize_gap_reduced(x: &[f64], hint: Option<&[f64]>, opts: &FeasibilityOptions) -> GapBounds {
    let n = x.len();
    let clamp = |v: f64| v.clamp(BOX_GUARD, 1.0 - BOX_GUARD);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if let Some(h) = hint {
        starts.push(h.iter().map(|&v| clamp(v)).collect());
    }
    let total: f64 = x.iter().sum();
    starts.push(x.iter().map(|&v| clamp(v / total.max(1.0))).collect());
    starts.push(vec![1.0 / n as f64; n]);
    let mut rng = block_rng(opts.seed, 0);
    while starts.len() < opts.starts.max(1) + usize::from(hint.is_some()) {
        starts.push((0..n).map(|_| clamp(rng.random::<f64>())).collect());
    }

    let mut best_point = starts[0].clone();
    let mut best_value = f64::INFINITY;
    for start in starts {
        let mut p = start;
        for k in 0..opts.subgradient_iter {
            let (gaps, inv_idle) = gaps_and_grads(x, &p);
            let (active, &value) = gaps
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("non-empty support");
            if value < best_value {
                best_value = value;
                best_point = p.clone();
            }
            let grad: Vec<f64> = (0..n)
                .map(|j| if j == active { -1.0 / p[j] } else { inv_idle[j] })
                .collect();
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                break;
            }
            let step = 0.05 / ((k + 1) as f64).sqrt();
            for j in 0..n {
                p[j] = clamp(p[j] - step * grad[j] / norm);
            }
        }
    }

    // A dual bound from the best point and from its projection on the face.
    let mut lower_bound = best_dual_bound(x, &best_point);
    let face_total: f64 = best_point.iter().sum();
    let on_face: Vec<f64> = best_point.iter().map(|&v| clamp(v / face_total)).collect();
    lower_bound = lower_bound.max(best_dual_bound(x, &on_face));
    GapBounds {
        best_point,
        best_value,
        lower_bound,
    }
}

/// Brute-force scan of a uniform grid on `[0,1]ⁿ` for a stabilizing control.
///
/// One-sided: `Member` comes with an exact grid witness, while `NonMember`
/// only means that no grid point works. Coordinates below `xᵢ` are skipped
/// since `sᵢ(p) ≤ pᵢ`.
pub fn membership_grid_oracle(x: &RateVector, grid_steps: usize) -> MembershipVerdict {
    let n = x.dim();
    let steps = grid_steps.max(1);
    let h = 1.0 / steps as f64;
    let lower: Vec<usize> = x
        .iter()
        .map(|&xi| ((xi * steps as f64) - 1e-9).ceil().max(0.0) as usize)
        .collect();
    if lower.iter().any(|&l| l > steps) {
        return no_grid_witness();
    }
    let mut idx = lower.clone();
    let mut p = vec![0.0; n];
    loop {
        for (pi, &k) in p.iter_mut().zip(&idx) {
            *pi = k as f64 * h;
        }
        let idle = others_idle(&p);
        if (0..n).all(|i| x[i] <= p[i] * idle[i]) {
            return MembershipVerdict {
                status: MembershipStatus::Member,
                residual: feasibility_gap(x, &p),
                witness: Some(ControlVector::from_vec_unchecked(p)),
            };
        }
        // odometer over the pruned grid
        let mut d = 0;
        loop {
            if d == n {
                return no_grid_witness();
            }
            if idx[d] < steps {
                idx[d] += 1;
                break;
            }
            idx[d] = lower[d];
            d += 1;
        }
    }
}

fn no_grid_witness() -> MembershipVerdict {
    MembershipVerdict {
        status: MembershipStatus::NonMember,
        witness: None,
        residual: f64::INFINITY,
    }
}
