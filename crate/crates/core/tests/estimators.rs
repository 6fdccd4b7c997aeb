mod common;

use mimpact::estimators::{self, AcfEstimate};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pareto(rng: &mut ChaCha8Rng, n: usize, xi: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            (1.0 - u).powf(-1.0 / (xi - 1.0))
        })
        .collect()
}

proptest! {
    #[test]
    fn acf_at_lag_zero_is_one(x in prop::collection::vec(-1e3f64..1e3, 3..200)) {
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-6));
        let est = estimators::acf(&x, 1).unwrap();
        prop_assert_eq!(est.values[0], 1.0);
    }

    #[test]
    fn planted_power_law_is_recovered(gamma in 0.05f64..2.0, amp in 1e-3f64..10.0) {
        let lags: Vec<usize> = (0..=1000).collect();
        let values = lags.iter().map(|&k| if k == 0 { 1.0 } else { amp * (k as f64).powf(-gamma) }).collect();
        let est = AcfEstimate { lags, values, series_length: 1_000_000 };
        let fit = estimators::fit_power_law_decay(&est, 10, 1000).unwrap();
        prop_assert!((fit.exponent - gamma).abs() <= 1e-9);
        prop_assert!((fit.amplitude / amp - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn exponent_relations_hold_together(h in 0.501f64..0.999) {
        let s = estimators::derive_exponents(h).unwrap();
        prop_assert!((s.gamma - (2.0 - 2.0 * h)).abs() <= 1e-12);
        prop_assert!((s.alpha - (3.0 - 2.0 * h)).abs() <= 1e-12);
        prop_assert!((s.phi - (h - 0.5)).abs() <= 1e-12);
        prop_assert!((s.phi - (1.0 - s.gamma) / 2.0).abs() <= 1e-12);
        prop_assert!((s.alpha - 1.0 - s.gamma).abs() <= 1e-12);
    }
}

#[test]
fn hill_error_shrinks_with_sample_size() {
    let xi = 2.5;
    let (mut small, mut large) = (0.0, 0.0);
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = pareto(&mut rng, 50_000, xi);
        let b = pareto(&mut rng, 100_000, xi);
        small += (estimators::hill_tail(&a, 0.0075).unwrap().xi - xi).abs();
        large += (estimators::hill_tail(&b, 0.0075).unwrap().xi - xi).abs();
    }
    assert!(
        large < small,
        "mean error {} at 2n vs {} at n",
        large / 20.0,
        small / 20.0
    );
}

#[test]
fn hurst_tracks_sign_memory() {
    // persistent runs raise H above one half
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut signs = Vec::with_capacity(1 << 16);
    while signs.len() < 1 << 16 {
        let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let u: f64 = rng.random();
        let run = (1.0 - u).powf(-1.0 / 0.6).floor() as usize;
        signs.extend(std::iter::repeat_n(s, run.min(1 << 16)));
    }
    signs.truncate(1 << 16);
    let h = estimators::hurst_periodogram(&signs).unwrap();
    assert!(h > 0.65, "H = {h}");
}
