//! Seeded samplers and the block-parallel driver shared by every randomized
//! routine.
//!
//! Work is cut into fixed-size blocks. Block `b` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `b`, and block results are
//! reduced in block order, so output is identical for any thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

/// Samples per parallel block.
pub const BLOCK_SIZE: usize = 1 << 14;

/// Generator for block (or trial) `stream` of a run seeded with `seed`.
pub fn block_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `work(block_index, rng, count)` over `total` items split into
/// [`BLOCK_SIZE`] blocks and returns the per-block results in block order.
pub fn run_blocks<T, F>(total: usize, seed: u64, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng, usize) -> T + Sync,
{
    let blocks = total.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK_SIZE;
            let count = BLOCK_SIZE.min(total - start);
            let mut rng = block_rng(seed, b as u64);
            work(b, &mut rng, count)
        })
        .collect()
}

/// Independent child seed for `(seed, a, b)` (SplitMix64 finalizer), used to
/// give each table cell or scan its own reproducible stream family.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform point of the face `{p ≥ 0 : Σ pᵢ = 1}` written into `out`,
/// via normalized unit-rate exponential variates.
pub fn fill_simplex_face<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut total = 0.0;
    for v in out.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        *v = e;
        total += e;
    }
    for v in out.iter_mut() {
        *v /= total;
    }
}

/// Uniform point of the solid simplex `{p ≥ 0 : Σ pᵢ ≤ 1}`: the first `n`
/// coordinates of a uniform point on the `n+1`-dimensional face.
pub fn fill_simplex<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut slack: f64 = rng.sample(Exp1);
    for v in out.iter_mut() {
        let e: f64 = rng.sample(Exp1);
        *v = e;
        slack += e;
    }
    for v in out.iter_mut() {
        *v /= slack;
    }
}

/// Uniform point of `[0,1]ⁿ`.
pub fn fill_unit_cube<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = rng.random::<f64>();
    }
}

pub fn simplex_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    fill_simplex(rng, &mut p);
    p
}

pub fn simplex_face_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    fill_simplex_face(rng, &mut p);
    p
}

pub fn unit_cube_point<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n];
    fill_unit_cube(rng, &mut p);
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_results_do_not_depend_on_thread_count() {
        let run = || {
            run_blocks(100_000, 7, |_, rng, count| {
                (0..count).map(|_| rng.random::<f64>()).sum::<f64>()
            })
        };
        let many = run();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(run);
        assert_eq!(many, single);
        assert_eq!(many.len(), 100_000usize.div_ceil(BLOCK_SIZE));
    }

    #[test]
    fn simplex_samples_stay_in_simplex() {
        let mut rng = block_rng(3, 0);
        for _ in 0..1000 {
            let p = simplex_point(&mut rng, 4);
            assert!(p.iter().all(|&v| v >= 0.0));
            assert!(p.iter().sum::<f64>() <= 1.0);
            let q = simplex_face_point(&mut rng, 4);
            assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn solid_simplex_mean_is_one_over_n_plus_one() {
        let n = 3;
        let draws = 200_000;
        let mut rng = block_rng(11, 0);
        let mut mean = vec![0.0; n];
        for _ in 0..draws {
            for (m, v) in mean.iter_mut().zip(simplex_point(&mut rng, n)) {
                *m += v;
            }
        }
        // coordinate of a uniform simplex point is Beta(1, n): mean 1/(n+1),
        // variance n/((n+1)²(n+2)).
        let sigma = (n as f64 / (16.0 * 5.0) / draws as f64).sqrt();
        for m in mean {
            assert!((m / draws as f64 - 0.25).abs() < 4.0 * sigma);
        }
    }
}
