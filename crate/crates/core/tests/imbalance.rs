mod common;

use mimpact::imbalance::{self, Conditioner, MIN_LARGE_ORDERS};
use mimpact::orderflow::derive_returns;
use mimpact::{HiddenOrderSet, Sign};
use proptest::prelude::*;

fn moves() -> impl Strategy<Value = (Vec<Sign>, Vec<f64>, Vec<f64>)> {
    (20usize..500).prop_flat_map(|n| {
        (
            prop::collection::vec(
                any::<bool>().prop_map(|b| if b { Sign::Buy } else { Sign::Sell }),
                n,
            ),
            prop::collection::vec(-1e-3f64..1e-3, n),
            prop::collection::vec(-1e-3f64..1e-3, n),
        )
    })
}

fn brokers(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("B{}", i % 3)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn pair_counts_cover_every_lag((signs, l, q) in moves(), k_frac in 0.0f64..0.9) {
        let series = common::series_from_moves(&signs, &l, &q, &brokers(signs.len()));
        let returns = derive_returns(&series).unwrap();
        let n = returns.len();
        let k_max = ((n - 1) as f64 * k_frac) as usize;
        let t = imbalance::conditional_table(&series, &returns, Conditioner::ActualSign, k_max).unwrap();
        for k in 0..=k_max {
            prop_assert_eq!(t.n_same[k] + t.n_opp[k] + t.n_tied[k], n - k);
        }
    }

    #[test]
    fn cumulative_response_matches_brute_force((signs, l, q) in moves()) {
        let series = common::series_from_moves(&signs, &l, &q, &brokers(signs.len()));
        let returns = derive_returns(&series).unwrap();
        let n = returns.len();
        let t_max = (n / 3).max(1);
        let t = imbalance::conditional_table(&series, &returns, Conditioner::ActualSign, t_max).unwrap();
        let i_o = imbalance::mean_abs_initial_impact(&returns);
        let curve = imbalance::cumulative_impacts(&t, i_o, t_max).unwrap();
        let eps = series.signs();
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for k in 0..=t_max {
            let m = (n - k) as f64;
            a += (0..n - k).map(|i| eps[i] * returns.r[i + k]).sum::<f64>() / m;
            b += (0..n - k).map(|i| i_o * eps[i] * eps[i + k]).sum::<f64>() / m;
            c += (0..n - k).map(|i| eps[i] * returns.l[i + k]).sum::<f64>() / m;
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + y.abs()).max(1e-3);
            prop_assert!(close(curve.i[k], a), "I({}) {} vs {}", k, curve.i[k], a);
            prop_assert!(close(curve.i_n[k], b), "I_N({}) {} vs {}", k, curve.i_n[k], b);
            prop_assert!(close(curve.i_l[k], c), "I_L({}) {} vs {}", k, curve.i_l[k], c);
        }
    }

    #[test]
    fn ratios_survive_global_mirror((signs, l, q) in moves()) {
        let names = brokers(signs.len());
        let series = common::series_from_moves(&signs, &l, &q, &names);
        let flipped: Vec<Sign> = signs.iter().map(|s| s.flip()).collect();
        let neg = |x: &[f64]| x.iter().map(|v| -v).collect::<Vec<_>>();
        let mirror = common::series_from_moves(&flipped, &neg(&l), &neg(&q), &names);
        let k_max = 10.min(signs.len() - 2);
        let table = |s| {
            let r = derive_returns(s).unwrap();
            imbalance::imbalance_ratios(&imbalance::conditional_table(s, &r, Conditioner::ActualSign, k_max).unwrap())
        };
        let (a, b) = (table(&series), table(&mirror));
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.transaction.map(f64::to_bits), y.transaction.map(f64::to_bits));
            prop_assert_eq!(x.ret.map(f64::to_bits), y.ret.map(f64::to_bits));
            prop_assert_eq!(x.liquidity.map(f64::to_bits), y.liquidity.map(f64::to_bits));
        }
    }

    #[test]
    fn pre_completion_profile_ignores_idle_fillers(
        sizes in prop::collection::vec(20usize..40, MIN_LARGE_ORDERS..MIN_LARGE_ORDERS + 10),
        seed in any::<u64>(), c in 2usize..5,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // back-to-back orders plus one trailing transaction
        let mut signs = Vec::new();
        let mut labels = Vec::new();
        for (j, &size) in sizes.iter().enumerate() {
            let s = if rng.random_bool(0.5) { Sign::Buy } else { Sign::Sell };
            signs.extend(std::iter::repeat_n(s, size));
            labels.extend(std::iter::repeat_n(j, size));
        }
        signs.push(Sign::Buy);
        labels.push(sizes.len());
        let n = signs.len();
        let l: Vec<f64> = (0..n).map(|_| rng.random_range(-1e-3..1e-3)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1e-3..1e-3)).collect();
        let names: Vec<String> = labels.iter().map(|j| format!("B{j}")).collect();
        let series = common::series_from_moves(&signs, &l, &q, &names);

        // each transaction followed by c - 1 silent singletons
        let (mut ds, mut dl, mut dq, mut dn, mut dlab) = (vec![], vec![], vec![], vec![], vec![]);
        for t in 0..n {
            ds.push(signs[t]);
            dl.push(l[t]);
            dq.push(q[t]);
            dn.push(names[t].clone());
            dlab.push(labels[t]);
            for f in 1..c {
                ds.push(Sign::Sell);
                dl.push(0.0);
                dq.push(0.0);
                dn.push(format!("F{t}_{f}"));
                dlab.push(n + t * c + f);
            }
        }
        let dilated = common::series_from_moves(&ds, &dl, &dq, &dn);

        let profile = |s, lab: &[usize]| {
            let r = derive_returns(s).unwrap();
            let o = HiddenOrderSet::from_labels(s, lab).unwrap();
            imbalance::decay_profile(s, &r, &o, 20, 0).unwrap()
        };
        let (a, b) = (profile(&series, &labels), profile(&dilated, &dlab));
        prop_assert_eq!(a.order_count, b.order_count);
        for (x, y) in a.pre.iter().zip(&b.pre) {
            prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
        }
    }
}
