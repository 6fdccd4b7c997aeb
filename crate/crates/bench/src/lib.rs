//! Shared fixtures for the benchmarks.

use mimpact::simulator::{self, SimConfig};
use mimpact::{SimOutput, TransactionSeries};

/// A seeded simulator run of `steps` transactions under the default config.
pub fn simulated_run(steps: usize, seed: u64) -> SimOutput {
    let config = SimConfig {
        steps,
        seed,
        max_size: Some(10_000),
        ..SimConfig::default()
    };
    simulator::simulate(&config).expect("default config is valid")
}

/// Transaction series of a seeded run.
pub fn simulated_series(steps: usize, seed: u64) -> TransactionSeries {
    simulated_run(steps, seed).series
}
