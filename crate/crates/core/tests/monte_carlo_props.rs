use aloha_core::exact::volume_lambda_exact;
use aloha_core::geometry::srs_member;
use aloha_core::monte_carlo::{
    figure3_table, paired_containment, volume_lambda_mc, volume_named_region_mc, SamplingDomain,
};
use aloha_core::region::membership_feasibility;
use aloha_core::{RateVector, Region};

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

#[test]
fn lambda_estimate_agrees_with_exact_volume() {
    for n in 2..=5 {
        let exact = volume_lambda_exact(n).unwrap().to_f64();
        let est = volume_lambda_mc(n, 1_000_000, 77 + n as u64).unwrap();
        assert!(est.within(exact, 3.0), "n={n}: {est:?} vs {exact}");
        let inv_fact = 1.0 / (1..=n).product::<usize>() as f64;
        assert!(est.mean >= -3.0 * est.std_error && est.mean <= inv_fact + 3.0 * est.std_error);
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let many = volume_lambda_mc(4, 200_000, 3).unwrap();
    let one = single_thread(|| volume_lambda_mc(4, 200_000, 3).unwrap());
    assert_eq!(many, one);
    let region = Region::inner(3, 2.0).unwrap();
    let many = volume_named_region_mc(&region, 3, 100_000, 4).unwrap();
    let one = single_thread(|| volume_named_region_mc(&region, 3, 100_000, 4).unwrap());
    assert_eq!(many, one);
}

#[test]
fn standard_error_halves_when_samples_quadruple() {
    for seed in 0..5 {
        let small = volume_lambda_mc(3, 100_000, seed).unwrap();
        let large = volume_lambda_mc(3, 400_000, seed + 100).unwrap();
        let ratio = large.std_error / small.std_error;
        assert!((ratio - 0.5).abs() <= 0.1, "ratio {ratio}");
        let small = volume_named_region_mc(&Region::Bc, 3, 100_000, seed).unwrap();
        let large = volume_named_region_mc(&Region::Bc, 3, 400_000, seed + 100).unwrap();
        let ratio = large.std_error / small.std_error;
        assert!((ratio - 0.5).abs() <= 0.1, "ratio {ratio}");
    }
}

#[test]
fn square_root_sum_hits_are_lambda_hits_on_a_shared_stream() {
    let n = 3;
    let srs = |x: &[f64]| srs_member(&RateVector::new(x.to_vec()).unwrap());
    let lambda = |x: &[f64]| membership_feasibility(&RateVector::new(x.to_vec()).unwrap(), 1e-9).is_member();
    let hits = paired_containment(srs, lambda, SamplingDomain::Simplex, n, 20_000, 8).unwrap();
    assert_eq!(hits.exceptions, 0);
    assert!(hits.inner_hits < hits.outer_hits);
}

#[test]
fn figure3_rows_are_ordered() {
    let rows = figure3_table(2..=5, 100.0, 200_000, 11).unwrap();
    for row in &rows {
        let lambda = row.lambda_exact.to_f64();
        assert!(row.srs_exact.to_f64() <= lambda);
        assert!(row.inner.mean <= lambda + 3.0 * row.inner.std_error);
        assert!(row.outer.mean >= lambda - 3.0 * row.outer.std_error);
        let records = row.records();
        assert_eq!(records[0].estimator, "lambda_exact");
        assert!(records.iter().all(|r| r.n == row.n));
    }
    assert_eq!(rows, figure3_table(2..=5, 100.0, 200_000, 11).unwrap());
}
