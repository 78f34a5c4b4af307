//! Monte Carlo volume estimators.
//!
//! `vol(Λ)` is estimated as `vol(𝒮)·E[det J(p)]` with `p` uniform on the
//! solid simplex; the other regions use hit-or-miss sampling. All estimators
//! run on [`crate::sampling::run_blocks`], so a fixed seed gives bit-identical
//! output on any number of threads.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::exact::{volume_lambda_exact, volume_srs_exact};
use crate::geometry::Region;
use crate::region::jacobian_det_raw;
use crate::sampling::{derive_seed, fill_simplex, fill_unit_cube, run_blocks};
use crate::{Error, ExactRational, Result};

/// Smallest sample count accepted by the estimators.
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// `|mean − value| ≤ k·std_error`.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingDomain {
    /// `{x ≥ 0 : Σ xᵢ ≤ 1}`, volume `1/n!`.
    Simplex,
    /// `[0,1]ⁿ`, volume 1.
    UnitCube,
}

impl SamplingDomain {
    pub fn volume(self, n: usize) -> f64 {
        match self {
            SamplingDomain::Simplex => inverse_factorial(n),
            SamplingDomain::UnitCube => 1.0,
        }
    }

    fn fill(self, rng: &mut rand_chacha::ChaCha8Rng, out: &mut [f64]) {
        match self {
            SamplingDomain::Simplex => fill_simplex(rng, out),
            SamplingDomain::UnitCube => fill_unit_cube(rng, out),
        }
    }

    /// Domain used for hit-or-miss estimates of `region`.
    pub fn for_region(region: &Region) -> Self {
        match region {
            Region::Bc => SamplingDomain::UnitCube,
            _ => SamplingDomain::Simplex,
        }
    }
}

fn inverse_factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc / k as f64)
}

fn check_args(n: usize, samples: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples are required, got {samples}"
        )));
    }
    Ok(())
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }

    fn std_error(&self) -> f64 {
        if self.count < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.count - 1.0) / self.count).sqrt()
    }
}

/// `vol(Λ) = ∫_𝒮 det J(p) dp`, estimated with `p` uniform on the simplex.
pub fn volume_lambda_mc(n: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    check_args(n, samples)?;
    let moments = run_blocks(samples, seed, |_, rng, count| {
        let mut p = vec![0.0; n];
        let mut m = Moments::default();
        for _ in 0..count {
            fill_simplex(rng, &mut p);
            m.push(jacobian_det_raw(&p));
        }
        m
    })
    .into_iter()
    .fold(Moments::default(), Moments::merge);
    let scale = inverse_factorial(n);
    Ok(McEstimate {
        mean: moments.mean * scale,
        std_error: moments.std_error() * scale,
        samples,
        seed,
    })
}

/// Hit-or-miss estimate of the volume of `{x ∈ domain : member(x)}`.
pub fn volume_region_mc<F>(
    member: F,
    domain: SamplingDomain,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> bool + Sync,
{
    check_args(n, samples)?;
    let hits: usize = run_blocks(samples, seed, |_, rng, count| {
        let mut x = vec![0.0; n];
        (0..count)
            .filter(|_| {
                domain.fill(rng, &mut x);
                member(&x)
            })
            .count()
    })
    .into_iter()
    .sum();
    let total = samples as f64;
    let frac = hits as f64 / total;
    let box_volume = domain.volume(n);
    Ok(McEstimate {
        mean: frac * box_volume,
        std_error: (frac * (1.0 - frac) / (total - 1.0)).sqrt() * box_volume,
        samples,
        seed,
    })
}

/// Hit-or-miss estimate for one of the named regions, sampled in `[0,1]ⁿ`
/// for `Λ_bc` and in the simplex otherwise.
pub fn volume_named_region_mc(region: &Region, n: usize, samples: usize, seed: u64) -> Result<McEstimate> {
    if let Region::InnerEllipsoidRegion { ellipsoid } | Region::OuterEllipsoidRegion { ellipsoid } = region {
        if ellipsoid.n != n {
            return Err(Error::DimensionMismatch {
                expected: ellipsoid.n,
                got: n,
            });
        }
    }
    volume_region_mc(|x| region.contains(x), SamplingDomain::for_region(region), n, samples, seed)
}

/// Hit counts of two predicates evaluated on one shared sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairedHits {
    pub samples: usize,
    pub inner_hits: usize,
    pub outer_hits: usize,
    /// Samples accepted by `inner` but rejected by `outer`.
    pub exceptions: usize,
}

/// Evaluates `inner` and `outer` on the same points, so that a containment
/// `inner ⊆ outer` shows up as zero exceptions with no sampling noise.
pub fn paired_containment<A, B>(
    inner: A,
    outer: B,
    domain: SamplingDomain,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<PairedHits>
where
    A: Fn(&[f64]) -> bool + Sync,
    B: Fn(&[f64]) -> bool + Sync,
{
    check_args(n, samples)?;
    let blocks = run_blocks(samples, seed, |_, rng, count| {
        let mut x = vec![0.0; n];
        let mut h = (0usize, 0usize, 0usize);
        for _ in 0..count {
            domain.fill(rng, &mut x);
            let a = inner(&x);
            let b = outer(&x);
            h.0 += a as usize;
            h.1 += b as usize;
            h.2 += (a && !b) as usize;
        }
        h
    });
    let (inner_hits, outer_hits, exceptions) = blocks
        .into_iter()
        .fold((0, 0, 0), |acc, h| (acc.0 + h.0, acc.1 + h.1, acc.2 + h.2));
    Ok(PairedHits {
        samples,
        inner_hits,
        outer_hits,
        exceptions,
    })
}

/// One `n` of the volume-versus-dimension table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure3Row {
    pub n: usize,
    pub lambda_exact: ExactRational,
    pub srs_exact: ExactRational,
    pub bc: McEstimate,
    pub inner: McEstimate,
    pub outer: McEstimate,
}

/// Flat table record; exact values carry `std_error = 0` and `samples = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeRecord {
    pub n: usize,
    pub estimator: String,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Figure3Row {
    pub fn records(&self) -> Vec<VolumeRecord> {
        let exact = |name: &str, v: &ExactRational| VolumeRecord {
            n: self.n,
            estimator: name.to_string(),
            mean: v.to_f64(),
            std_error: 0.0,
            samples: 0,
            seed: 0,
        };
        let mc = |name: &str, e: &McEstimate| VolumeRecord {
            n: self.n,
            estimator: name.to_string(),
            mean: e.mean,
            std_error: e.std_error,
            samples: e.samples,
            seed: e.seed,
        };
        vec![
            exact("lambda_exact", &self.lambda_exact),
            exact("srs_exact", &self.srs_exact),
            mc("bc_mc", &self.bc),
            mc("inner_mc", &self.inner),
            mc("outer_mc", &self.outer),
        ]
    }
}

/// Exact `vol(Λ)` and `vol(Λ_srs)` with hit-or-miss estimates of `Λ_bc`,
/// `Λ_I` and `Λ_O` for every `n` in `n_range`. Each cell uses its own
/// derived seed, recorded in the estimate.
pub fn figure3_table(n_range: RangeInclusive<usize>, c: f64, samples: usize, seed: u64) -> Result<Vec<Figure3Row>> {
    n_range
        .map(|n| {
            let lambda_exact = volume_lambda_exact(n)?;
            let srs_exact = volume_srs_exact(n)?;
            let cell = |k: u64| derive_seed(seed, n as u64, k);
            let bc = volume_named_region_mc(&Region::Bc, n, samples, cell(0))?;
            let inner = volume_named_region_mc(&Region::inner(n, c)?, n, samples, cell(1))?;
            let outer = volume_named_region_mc(&Region::outer(n, c)?, n, samples, cell(2))?;
            Ok(Figure3Row {
                n,
                lambda_exact,
                srs_exact,
                bc,
                inner,
                outer,
            })
        })
        .collect()
}
