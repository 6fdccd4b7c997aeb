//! Sample autocorrelation, power-law decay fits, the Hill tail estimator,
//! periodogram Hurst estimation and the exponent relations tying the
//! Hurst exponent to the order-size tail and the autoregressive decay.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{self, LineFit};

/// Default ACF power-law fit window.
pub const DEFAULT_FIT_RANGE: (usize, usize) = (10, 1000);
/// Default Hill tail fraction.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.0075;
/// Default share of nonzero frequencies used by the periodogram fit.
pub const DEFAULT_PERIODOGRAM_BAND: f64 = 0.1;
/// Minimum series length for the periodogram estimator.
pub const MIN_PERIODOGRAM_LEN: usize = 1 << 14;

/// Sample autocorrelation at lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfEstimate {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    #[serde(skip)]
    pub series_length: usize,
}

impl AcfEstimate {
    pub fn at(&self, lag: usize) -> Option<f64> {
        self.values.get(lag).copied()
    }
}

// below this many lag-products the direct sum is cheaper than an FFT
const DIRECT_WORK_LIMIT: usize = 1 << 22;

/// Biased (divide-by-N), mean-subtracted sample autocorrelation.
pub fn acf(x: &[f64], max_lag: usize) -> Result<AcfEstimate> {
    let n = x.len();
    if n <= max_lag + 1 {
        return Err(Error::LagTooLarge { max_lag, len: n });
    }
    let m = stats::mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum::<f64>();
    if c0 <= 0.0 || !c0.is_finite() {
        return Err(Error::ZeroVariance);
    }

    let cov = if n.saturating_mul(max_lag + 1) <= DIRECT_WORK_LIMIT {
        autocov_direct(&centered, max_lag)
    } else {
        autocov_fft(&centered, max_lag)
    };
    let mut values: Vec<f64> = cov.iter().map(|c| c / c0).collect();
    values[0] = 1.0;
    Ok(AcfEstimate {
        lags: (0..=max_lag).collect(),
        values,
        series_length: n,
    })
}

fn autocov_direct(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .into_par_iter()
        .map(|k| x[..x.len() - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum())
        .collect()
}

fn autocov_fft(x: &[f64], max_lag: usize) -> Vec<f64> {
    let size = (2 * x.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    fwd.process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    buf[..=max_lag].iter().map(|c| c.re / size as f64).collect()
}

/// Power-law `amplitude * lag^(-exponent)` fitted on log-log axes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub lag_min: usize,
    pub lag_max: usize,
    #[serde(skip)]
    pub points_used: usize,
    #[serde(skip)]
    pub nonpositive_excluded: usize,
    #[serde(skip)]
    pub exponent_stderr: f64,
}

/// Least-squares fit of `log(value)` against `log(lag)` over the strictly
/// positive values with `lag_min <= lag <= lag_max`.
pub fn fit_power_law_decay(acf: &AcfEstimate, lag_min: usize, lag_max: usize) -> Result<PowerLawFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = 0;
    for (&lag, &v) in acf.lags.iter().zip(&acf.values) {
        if lag == 0 || lag < lag_min || lag > lag_max {
            continue;
        }
        if v > 0.0 {
            xs.push((lag as f64).ln());
            ys.push(v.ln());
        } else {
            excluded += 1;
        }
    }
    if xs.len() < 5 {
        return Err(Error::InsufficientPositivePoints { found: xs.len() });
    }
    let LineFit {
        slope,
        intercept,
        slope_stderr,
        points,
    } = stats::ols(&xs, &ys).ok_or(Error::InsufficientPositivePoints { found: xs.len() })?;
    Ok(PowerLawFit {
        exponent: -slope,
        amplitude: intercept.exp(),
        lag_min,
        lag_max,
        points_used: points,
        nonpositive_excluded: excluded,
        exponent_stderr: slope_stderr,
    })
}

/// Hill tail estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    /// Density tail exponent: `p(x) ~ x^(-xi)`.
    pub xi: f64,
    pub x_min: f64,
    pub n: usize,
    #[serde(skip)]
    pub fraction: f64,
}

impl TailFit {
    /// Exponent of the complementary CDF, `P(X > x) ~ x^(-(xi - 1))`.
    pub fn ccdf_exponent(&self) -> f64 {
        self.xi - 1.0
    }
}

/// `1 + n / sum(ln(x / x_min))` over the samples `x >= x_min`.
pub fn hill_estimate(samples: &[f64], x_min: f64) -> Result<(f64, usize)> {
    let mut n = 0usize;
    let mut log_sum = 0.0;
    for &x in samples {
        if x >= x_min {
            n += 1;
            log_sum += (x / x_min).ln();
        }
    }
    if n == 0 {
        return Err(Error::TooFewTailSamples { n });
    }
    if log_sum <= 0.0 {
        return Err(Error::ZeroLogSum);
    }
    Ok((1.0 + n as f64 / log_sum, n))
}

/// Hill estimator with the threshold at the `(1 - fraction)` sample quantile.
pub fn hill_tail(samples: &[f64], fraction: f64) -> Result<TailFit> {
    if !(fraction > 0.0 && fraction <= 0.05) {
        return Err(Error::FractionOutOfRange(fraction));
    }
    if let Some(&bad) = samples.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::NonPositiveSample(bad));
    }
    let target = (fraction * samples.len() as f64).ceil() as usize;
    if target < 10 {
        return Err(Error::TooFewTailSamples { n: target });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let x_min = sorted[sorted.len() - target];
    let (xi, n) = hill_estimate(&sorted, x_min)?;
    Ok(TailFit {
        xi,
        x_min,
        n,
        fraction,
    })
}

/// Periodogram Hurst estimate of a stationary long-memory sequence.
///
/// Fits `log I(f)` against `log f` over the lowest `band` share of nonzero
/// Fourier frequencies; for fractional noise `I(f) ~ f^(1 - 2H)`, so
/// `H = (1 - slope) / 2`, clipped to `(0.01, 0.99)`.
pub fn hurst_periodogram_band(signs: &[f64], band: f64) -> Result<f64> {
    let n = signs.len();
    if n < MIN_PERIODOGRAM_LEN {
        return Err(Error::SeriesTooShort {
            len: n,
            needed: MIN_PERIODOGRAM_LEN,
        });
    }
    let m = stats::mean(signs);
    let mut buf: Vec<Complex<f64>> = signs.iter().map(|&v| Complex::new(v - m, 0.0)).collect();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);

    let nyquist = n / 2;
    let top = ((band * nyquist as f64).floor() as usize).max(2);
    let mut xs = Vec::with_capacity(top);
    let mut ys = Vec::with_capacity(top);
    for (j, c) in buf.iter().enumerate().take(top + 1).skip(1) {
        let power = c.norm_sqr() / n as f64;
        if power > 0.0 {
            xs.push((j as f64 / n as f64).ln());
            ys.push(power.ln());
        }
    }
    let fit = stats::ols(&xs, &ys).ok_or(Error::ZeroVariance)?;
    Ok(((1.0 - fit.slope) / 2.0).clamp(0.01, 0.99))
}

pub fn hurst_periodogram(signs: &[f64]) -> Result<f64> {
    hurst_periodogram_band(signs, DEFAULT_PERIODOGRAM_BAND)
}

/// Hurst exponent with the derived sign-ACF decay `gamma`, order-size tail
/// `alpha` and autoregressive decay `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSet {
    #[serde(rename = "H")]
    pub h: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub phi: f64,
}

pub fn derive_exponents(h: f64) -> Result<ExponentSet> {
    if !(h > 0.5 && h < 1.0) {
        return Err(Error::HOutOfRange(h));
    }
    Ok(ExponentSet {
        h,
        gamma: 2.0 - 2.0 * h,
        alpha: 3.0 - 2.0 * h,
        phi: h - 0.5,
    })
}

/// Same relations entered from a fitted sign-ACF decay exponent (`H = 1 - gamma/2`).
pub fn exponents_from_gamma(gamma: f64) -> Result<ExponentSet> {
    derive_exponents(1.0 - gamma / 2.0)
}
