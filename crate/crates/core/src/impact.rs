//! One-transaction impact function `f(v) = f1 * v^f2` and the hidden-order
//! impact laws under the two liquidity predictors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::ExponentSet;
use crate::hidden_orders::HiddenOrderSet;
use crate::liquidity::Predictor;
use crate::orderflow::{ReturnSeries, TransactionSeries};
use crate::stats::{self, Moments};

/// Minimum observations for a volume bin to enter the fit.
pub const MIN_BIN_COUNT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactFunction {
    pub f1: f64,
    pub f2: f64,
}

impl ImpactFunction {
    pub fn new(f1: f64, f2: f64) -> Result<Self> {
        if !(f1 > 0.0 && f1.is_finite()) {
            return Err(Error::InvalidImpactFunction(format!(
                "f1 = {f1} must be positive"
            )));
        }
        if !(0.0..1.0).contains(&f2) {
            return Err(Error::InvalidImpactFunction(format!("f2 = {f2} outside [0, 1)")));
        }
        Ok(Self { f1, f2 })
    }

    pub fn eval(&self, v: f64) -> f64 {
        if self.f2 == 0.0 {
            self.f1
        } else {
            self.f1 * v.powf(self.f2)
        }
    }
}

/// One volume bin of an impact fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeBin {
    pub center: f64,
    pub mean: f64,
    pub count: usize,
    pub used: bool,
}

/// Result of an impact-function fit with its binning diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactFit {
    pub f1: f64,
    pub f2: f64,
    pub bins: Vec<VolumeBin>,
    /// Bins dropped for having fewer than `MIN_BIN_COUNT` observations.
    pub excluded_sparse: usize,
    /// Bins dropped for a nonpositive mean (no logarithm).
    pub excluded_nonpositive: usize,
    pub observations: usize,
}

impl ImpactFit {
    /// The fitted function. Fitted values are not range-checked.
    pub fn function(&self) -> ImpactFunction {
        ImpactFunction {
            f1: self.f1,
            f2: self.f2,
        }
    }
}

fn fit_binned(points: &[(f64, f64)], bins: usize) -> Result<ImpactFit> {
    if bins == 0 {
        return Err(Error::TooFewObservations("bins must be positive".into()));
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::TooFewObservations("all volumes are equal".into()));
    }
    let (llo, lhi) = (lo.ln(), hi.ln());
    let width = (lhi - llo) / bins as f64;
    let mut acc: Vec<(f64, Moments)> = vec![(0.0, Moments::new()); bins];
    for &(v, y) in points {
        let b = (((v.ln() - llo) / width) as usize).min(bins - 1);
        acc[b].0 += v.ln();
        acc[b].1.push(y);
    }

    let mut out_bins = Vec::with_capacity(bins);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let (mut sparse, mut nonpos) = (0, 0);
    for (log_sum, m) in acc {
        let count = m.count();
        if count == 0 {
            continue;
        }
        let center = (log_sum / count as f64).exp();
        let mean = m.mean().unwrap_or(f64::NAN);
        let used = if count < MIN_BIN_COUNT {
            sparse += 1;
            false
        } else if !(mean > 0.0) {
            nonpos += 1;
            false
        } else {
            xs.push(center.ln());
            ys.push(mean.ln());
            true
        };
        out_bins.push(VolumeBin {
            center,
            mean,
            count,
            used,
        });
    }
    let fit = stats::ols(&xs, &ys)
        .ok_or_else(|| Error::TooFewObservations(format!("{} usable volume bins (need 2)", xs.len())))?;
    Ok(ImpactFit {
        f1: fit.intercept.exp(),
        f2: fit.slope,
        bins: out_bins,
        excluded_sparse: sparse,
        excluded_nonpositive: nonpos,
        observations: points.len(),
    })
}

fn check_aligned(series: &TransactionSeries, returns: &ReturnSeries) -> Result<()> {
    if returns.len() + 1 != series.len() {
        return Err(Error::MisalignedInputs(format!(
            "{} returns for {} transactions",
            returns.len(),
            series.len()
        )));
    }
    Ok(())
}

/// Fits `f1 * v^f2` to per-bin means of `eps_i * r_i` over log-spaced volume bins.
pub fn fit_impact_function(
    series: &TransactionSeries,
    returns: &ReturnSeries,
    bins: usize,
) -> Result<ImpactFit> {
    check_aligned(series, returns)?;
    if returns.len() < 10 * bins {
        return Err(Error::TooFewObservations(format!(
            "{} returns for {bins} bins (need {})",
            returns.len(),
            10 * bins
        )));
    }
    let points: Vec<(f64, f64)> = series
        .transactions()
        .iter()
        .zip(&returns.r)
        .map(|(t, r)| (t.volume, t.sign.value() * r))
        .collect();
    fit_binned(&points, bins)
}

/// The same fit restricted to transactions with nonzero initial impact.
pub fn fit_impact_nonzero(
    series: &TransactionSeries,
    returns: &ReturnSeries,
    bins: usize,
) -> Result<ImpactFit> {
    check_aligned(series, returns)?;
    let points: Vec<(f64, f64)> = series
        .transactions()
        .iter()
        .zip(returns.r.iter().zip(&returns.l))
        .filter(|(_, (_, l))| **l != 0.0)
        .map(|(t, (r, _))| (t.volume, t.sign.value() * r))
        .collect();
    if points.len() < 1000 {
        return Err(Error::TooFewObservations(format!(
            "{} transactions with nonzero initial impact (need 1000)",
            points.len()
        )));
    }
    fit_binned(&points, bins)
}

/// `eps f(v)/(1-phi) * theta^-phi * N^(1-phi)`.
pub fn impact_e1(eps: f64, v: f64, theta: f64, n: f64, phi: f64, f: &ImpactFunction) -> Result<f64> {
    if !(phi > 0.0 && phi < 0.5) {
        return Err(Error::PhiOutOfRange(phi));
    }
    Ok(eps * f.eval(v) / (1.0 - phi) * theta.powf(-phi) * n.powf(1.0 - phi))
}

/// `alpha eps f(v) ln(1+N)`.
pub fn impact_e2(eps: f64, v: f64, n: f64, alpha: f64, f: &ImpactFunction) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(alpha * eps * f.eval(v) * n.ln_1p())
}

/// One size bin of a hidden-order impact curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeBin {
    /// Mean `N` of the orders in the bin.
    #[serde(rename = "N")]
    pub n: f64,
    pub mean: f64,
    /// `None` for single-order bins.
    pub stderr: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HiddenOrderImpactCurve {
    pub mode: Predictor,
    pub bins: Vec<SizeBin>,
    /// Scaled theory (`N^(1-phi)` or `ln(1+N)`) at each bin's mean `N`.
    pub theory: Vec<f64>,
}

/// Size bin index: one bin per integer up to 10, then five per decade.
pub fn size_bin(n: usize) -> usize {
    if n <= 10 {
        n.saturating_sub(1)
    } else {
        10 + (5.0 * (n as f64 / 10.0).log10()).floor() as usize
    }
}

/// Theory curve of the scaled hidden-order return.
pub fn scaled_theory(mode: Predictor, n: f64, params: &ExponentSet) -> f64 {
    match mode {
        Predictor::E1 => n.powf(1.0 - params.phi),
        Predictor::E2 => n.ln_1p(),
    }
}

/// Bins scaled hidden-order returns by size. `R` runs from the midprice just
/// before the first piece to just after the last.
pub fn empirical_hidden_order_curve(
    series: &TransactionSeries,
    returns: &ReturnSeries,
    orders: &HiddenOrderSet,
    mode: Predictor,
    params: &ExponentSet,
    f: &ImpactFunction,
) -> Result<HiddenOrderImpactCurve> {
    check_aligned(series, returns)?;
    if orders.transaction_count() != series.len() {
        return Err(Error::MisalignedInputs(format!(
            "orders cover {} transactions, series has {}",
            orders.transaction_count(),
            series.len()
        )));
    }
    if orders.is_empty() {
        return Err(Error::EmptyInput);
    }
    let tx = series.transactions();
    let mut acc: Vec<(f64, Moments)> = Vec::new();
    for o in &orders.orders {
        let big_r = tx[o.end()].log_mid_post - tx[o.start()].log_mid_pre;
        let denom = o.sign.value() * f.eval(o.v_mean);
        let scaled = match mode {
            Predictor::E1 => big_r * o.theta.powf(params.phi) * (1.0 - params.phi) / denom,
            Predictor::E2 => big_r / (params.alpha * denom),
        };
        let b = size_bin(o.n());
        if acc.len() <= b {
            acc.resize(b + 1, (0.0, Moments::new()));
        }
        acc[b].0 += o.n() as f64;
        acc[b].1.push(scaled);
    }
    let bins: Vec<SizeBin> = acc
        .into_iter()
        .filter(|(_, m)| m.count() > 0)
        .map(|(n_sum, m)| SizeBin {
            n: n_sum / m.count() as f64,
            mean: m.mean().unwrap_or(f64::NAN),
            stderr: m.stderr(),
            count: m.count(),
        })
        .collect();
    let theory = bins.iter().map(|b| scaled_theory(mode, b.n, params)).collect();
    Ok(HiddenOrderImpactCurve { mode, bins, theory })
}
