mod common;

use proptest::prelude::*;
use relichoice::analysis::{self, survival};
use relichoice::montecarlo::{
    estimate_mttf, estimate_survival, estimate_survival_curve, failure_times, SimulationConfig,
};
use relichoice::FormulaMode;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use common::{flat_parallel, flat_series, strategies, survival_oracle};

fn within(value: f64, expected: f64, std_error: f64, k: f64) -> bool {
    (value - expected).abs() <= k * std_error
}

#[test]
fn unit_exponential_mean() {
    let spec = flat_series(&[1.0], &[0.0]);
    let e = estimate_mttf(&spec, &SimulationConfig::new(1_000_000, 11).unwrap());
    assert!(within(e.value, 1.0, 0.001, 3.0), "{e:?}");
    assert!((e.std_error - 0.001).abs() < 1e-5, "{e:?}");
}

#[test]
fn parallel_mttf() {
    let spec = flat_parallel(&[0.2, 0.3, 0.5], &[1.0, 2.0, 4.0], &[0.0; 3]);
    let e = estimate_mttf(&spec, &SimulationConfig::new(1_000_000, 12).unwrap());
    assert!(within(e.value, 0.475, e.std_error, 3.0), "{e:?}");
}

#[test]
fn series_mttf() {
    let spec = flat_series(&[0.1, 0.2, 0.3], &[0.0; 3]);
    let e = estimate_mttf(&spec, &SimulationConfig::new(1_000_000, 13).unwrap());
    assert!(within(e.value, 1.0 / 0.6, e.std_error, 3.0), "{e:?}");
}

#[test]
fn staggered_parallel_mttf_matches_mtbf_closed_form() {
    let spec = flat_parallel(&[0.5, 0.5], &[1.0, 1.0], &[2.0, 4.0]);
    let e = estimate_mttf(&spec, &SimulationConfig::new(1_000_000, 14).unwrap());
    let mtbf = analysis::mtbf(&spec, FormulaMode::Paper).unwrap();
    let mttf = analysis::mttf(&spec, FormulaMode::Paper).unwrap();
    assert_eq!(mtbf, 4.0);
    assert_eq!(mttf, 1.0);
    assert!(within(e.value, 4.0, e.std_error, 3.0), "{e:?}");
    assert!(!within(e.value, mttf, e.std_error, 100.0));
    let numeric = analysis::mttf(&spec, FormulaMode::Numeric).unwrap();
    assert!((numeric - 4.0).abs() < 1e-10, "{numeric}");
}

#[test]
fn survival_at_one_for_unit_exponential() {
    let spec = flat_series(&[1.0], &[0.0]);
    let e = estimate_survival(&spec, 1.0, &SimulationConfig::new(100_000, 15).unwrap());
    assert!(within(e.value, (-1.0f64).exp(), 0.0015, 3.0), "{e:?}");
}

#[test]
fn nothing_fails_before_installation() {
    let spec = flat_parallel(&[0.5, 0.5], &[3.0, 0.1], &[0.2, 1.0]);
    let e = estimate_survival(&spec, 0.0, &SimulationConfig::new(10_000, 16).unwrap());
    assert_eq!((e.value, e.std_error), (1.0, 0.0));
}

/// Equal-probability bin edges of the failure-time distribution.
fn quantile_edges(spec: &relichoice::SystemSpec, bins: usize) -> Vec<f64> {
    (1..bins)
        .map(|k| {
            let target = 1.0 - k as f64 / bins as f64;
            let (mut lo, mut hi) = (0.0, 1.0);
            while survival_oracle(spec, &spec.root, hi) > target {
                hi *= 2.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if survival_oracle(spec, &spec.root, mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[test]
fn failure_time_histogram_fits_mixture_density() {
    let spec = flat_parallel(&[0.2, 0.3, 0.5], &[1.0, 2.0, 4.0], &[0.0, 0.5, 1.0]);
    let bins = 20;
    let trials = 1_000_000;
    let edges = quantile_edges(&spec, bins);
    let mut counts = vec![0u64; bins];
    for t in failure_times(&spec, &SimulationConfig::new(trials, 17).unwrap()) {
        counts[edges.partition_point(|&e| e < t)] += 1;
    }
    let expected = trials as f64 / bins as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.001, "chi2 = {chi2}, p = {p}, counts = {counts:?}");
}

#[test]
fn thread_count_does_not_change_results() {
    let spec = flat_parallel(&[0.6, 0.4], &[0.3, 0.9], &[0.0, 2.0]);
    let cfg = SimulationConfig::new(50_000, 18).unwrap();
    let parallel = failure_times(&spec, &cfg);
    let serial = failure_times(&spec, &cfg.with_parallel(false));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let pooled = pool.install(|| failure_times(&spec, &cfg));
    assert!(parallel
        .iter()
        .zip(&serial)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(parallel
        .iter()
        .zip(&pooled)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn estimates_track_survival(spec in strategies::spec_with(3.0, 3.0), seed in any::<u64>()) {
        let cfg = SimulationConfig::new(20_000, seed).unwrap();
        let end = spec.max_t0() + 2.0;
        let times: Vec<f64> = (0..8).map(|k| end * k as f64 / 7.0).collect();
        let est = estimate_survival_curve(&spec, &times, &cfg);
        prop_assert!(est.windows(2).all(|w| w[1].value <= w[0].value));
        for (t, e) in times.iter().zip(&est) {
            let exact = survival(&spec, *t);
            // 6 sigma plus a floor for estimates with zero variance
            prop_assert!((e.value - exact).abs() <= 6.0 * e.std_error + 1e-3, "T={}: {:?} vs {}", t, e, exact);
        }
    }
}
