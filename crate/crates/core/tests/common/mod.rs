#![allow(dead_code)]

use mimpact::{Sign, Transaction, TransactionSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random broker-tagged series with a few brokers and a wandering midprice.
pub fn random_series(seed: u64, n: usize, brokers: usize) -> TransactionSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mid = 0.0;
    let tx = (0..n)
        .map(|i| {
            let sign = if rng.random_bool(0.5) {
                Sign::Buy
            } else {
                Sign::Sell
            };
            let pre = mid;
            let post = pre + sign.value() * rng.random_range(0.0..1e-3);
            mid = post + rng.random_range(-5e-4..5e-4);
            Transaction {
                index: i,
                broker: format!("B{}", rng.random_range(0..brokers)),
                sign,
                volume: rng.random_range(1.0..1e4),
                log_mid_pre: pre,
                log_mid_post: post,
            }
        })
        .collect();
    TransactionSeries::new(tx).unwrap()
}

/// Series with the given signs and per-step immediate and later moves.
pub fn series_from_moves(signs: &[Sign], l: &[f64], q: &[f64], brokers: &[String]) -> TransactionSeries {
    let mut mid = 0.0;
    let tx = signs
        .iter()
        .enumerate()
        .map(|(i, &sign)| {
            let pre = mid;
            let post = pre + l[i];
            mid = post + q[i];
            Transaction {
                index: i,
                broker: brokers[i].clone(),
                sign,
                volume: 100.0,
                log_mid_pre: pre,
                log_mid_post: post,
            }
        })
        .collect();
    TransactionSeries::new(tx).unwrap()
}
