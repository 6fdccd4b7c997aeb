//! Liquidity predictors. E1 is an autoregression on past `eps * f(v)`; E2
//! sums what is expected from the currently active hidden orders.

use std::collections::VecDeque;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hidden_orders::{ActiveOrder, ActivityMode, ActivitySweep, HiddenOrderSet, ThetaSource};
use crate::impact::ImpactFunction;
use crate::orderflow::TransactionSeries;

pub const DEFAULT_AR_LAGS: usize = 1000;

/// Which liquidity predictor is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Predictor {
    E1,
    E2,
}

/// AR weights `a_k = phi * k^(-1-phi)` for `k = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArCoefficients {
    pub phi: f64,
    pub a: Vec<f64>,
    pub normalized: bool,
}

impl ArCoefficients {
    pub fn new(phi: f64, k: usize, normalize: bool) -> Result<Self> {
        if !(phi > 0.0 && phi < 0.5) {
            return Err(Error::PhiOutOfRange(phi));
        }
        if k == 0 {
            return Err(Error::ConfigInvalid("AR truncation K must be >= 1".into()));
        }
        let mut a: Vec<f64> = (1..=k).map(|k| phi * (k as f64).powf(-1.0 - phi)).collect();
        if normalize {
            let s: f64 = a.iter().sum();
            a.iter_mut().for_each(|x| *x /= s);
        }
        Ok(Self {
            phi,
            a,
            normalized: normalize,
        })
    }

    /// Truncation lag `K`.
    pub fn k(&self) -> usize {
        self.a.len()
    }
}

/// Rolling history of `eps * f(v)` (and of `eps`) for E1, newest first.
#[derive(Debug, Clone)]
pub struct E1State {
    coeffs: ArCoefficients,
    impact: VecDeque<f64>,
    signs: VecDeque<f64>,
}

impl E1State {
    pub fn new(coeffs: ArCoefficients) -> Self {
        let k = coeffs.k();
        Self {
            coeffs,
            impact: VecDeque::with_capacity(k),
            signs: VecDeque::with_capacity(k),
        }
    }

    pub fn coefficients(&self) -> &ArCoefficients {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.impact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impact.is_empty()
    }

    /// Appends the transaction just executed.
    pub fn push(&mut self, sign: f64, f_v: f64) {
        if self.impact.len() == self.coeffs.k() {
            self.impact.pop_back();
            self.signs.pop_back();
        }
        self.impact.push_front(sign * f_v);
        self.signs.push_front(sign);
    }

    fn weighted(&self, h: &VecDeque<f64>) -> Result<f64> {
        if h.is_empty() {
            return Err(Error::EmptyHistory);
        }
        Ok(self.coeffs.a.iter().zip(h).map(|(a, x)| a * x).sum())
    }

    /// `lambda = sum_k a_k eps_{i-k} f(v_{i-k})`.
    pub fn lambda(&self) -> Result<f64> {
        self.weighted(&self.impact)
    }

    /// `eps_hat = sum_k a_k eps_{i-k}`.
    pub fn predict_sign(&self) -> Result<f64> {
        self.weighted(&self.signs)
    }
}

fn check_active(o: &ActiveOrder) -> Result<()> {
    if o.n_so_far < 1 {
        return Err(Error::BadOrderState(format!("order {} has n = 0", o.order_id)));
    }
    if !(o.theta_estimate >= 1.0) {
        return Err(Error::BadOrderState(format!(
            "order {} has theta {} < 1",
            o.order_id, o.theta_estimate
        )));
    }
    Ok(())
}

/// `lambda = sum_j (n_j/(n_j+1))^alpha eps_j f(v_j) / theta_j` over the active view.
pub fn lambda_e2(view: &[ActiveOrder], alpha: f64, f: &ImpactFunction) -> Result<f64> {
    let mut s = 0.0;
    for o in view {
        check_active(o)?;
        s += continuation_probability(o.n_so_far, alpha) * o.sign.value() * f.eval(o.v_mean)
            / o.theta_estimate;
    }
    Ok(s)
}

/// `eps_hat = sum_j (n_j/(n_j+1))^alpha eps_j / theta_j`. Not clipped.
pub fn predict_sign_e2(view: &[ActiveOrder], alpha: f64) -> Result<f64> {
    let mut s = 0.0;
    for o in view {
        check_active(o)?;
        s += continuation_probability(o.n_so_far, alpha) * o.sign.value() / o.theta_estimate;
    }
    Ok(s)
}

/// `P(N >= n+1 | N >= n) = (n/(n+1))^alpha`.
pub fn continuation_probability(n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    (n / (n + 1.0)).powf(alpha)
}

/// `((1 + eps_hat)/2, (1 - eps_hat)/2)`.
pub fn prob_sign(eps_hat: f64) -> Result<(f64, f64)> {
    if !(-1.0..=1.0).contains(&eps_hat) {
        return Err(Error::EpsHatOutOfRange(eps_hat));
    }
    let p_plus = (1.0 + eps_hat) / 2.0;
    Ok((p_plus, 1.0 - p_plus))
}

/// `(1 - eps_hat)/(1 + eps_hat)`, the efficient ratio `r+/r-`.
pub fn efficiency_ratio(eps_hat: f64) -> Result<f64> {
    if eps_hat.is_nan() || eps_hat.abs() > 1.0 {
        return Err(Error::EpsHatOutOfRange(eps_hat));
    }
    if eps_hat.abs() == 1.0 {
        return Err(Error::DegenerateCertainty);
    }
    Ok((1.0 - eps_hat) / (1.0 + eps_hat))
}

/// `out[i] = sum_{k=1}^{min(K, i)} a_k x[i-k]` for every `i`; a whole-series
/// E1 liquidity trace. Uses an FFT convolution for long inputs.
pub fn lambda_series_e1(coeffs: &ArCoefficients, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let k = coeffs.k().min(n.saturating_sub(1));
    if n == 0 {
        return Vec::new();
    }
    if n.saturating_mul(k) <= 1 << 24 {
        return (0..n)
            .map(|i| (1..=k.min(i)).map(|j| coeffs.a[j - 1] * x[i - j]).sum())
            .collect();
    }
    let len = (n + k + 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut xa: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    xa.resize(len, Complex::new(0.0, 0.0));
    let mut aa = vec![Complex::new(0.0, 0.0); len];
    for j in 1..=k {
        aa[j] = Complex::new(coeffs.a[j - 1], 0.0);
    }
    fwd.process(&mut xa);
    fwd.process(&mut aa);
    for (u, v) in xa.iter_mut().zip(&aa) {
        *u *= v;
    }
    inv.process(&mut xa);
    let scale = 1.0 / len as f64;
    xa[..n].iter().map(|c| c.re * scale).collect()
}

/// Causal sign predictor along a series: entry `i` uses only transactions
/// `< i`. Entry 0 (no history) is 0.
pub fn predictor_series_e1(series: &TransactionSeries, coeffs: &ArCoefficients) -> Vec<f64> {
    let mut st = E1State::new(coeffs.clone());
    let mut out = Vec::with_capacity(series.len());
    for t in series.transactions() {
        out.push(st.predict_sign().unwrap_or(0.0));
        st.push(t.sign.value(), 1.0);
    }
    out
}

/// Causal E2 sign predictor along a series: entry `i` is evaluated on the
/// activity view after transaction `i - 1`; entry 0 is 0.
pub fn predictor_series_e2(orders: &HiddenOrderSet, alpha: f64, mode: ActivityMode) -> Result<Vec<f64>> {
    let n = orders.transaction_count();
    let mut sweep = ActivitySweep::new(orders, mode, ThetaSource::Running);
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    for _ in 1..n {
        let view = sweep.advance()?;
        out.push(predict_sign_e2(view, alpha)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orderflow::Sign;

    fn active(n: usize, theta: f64, sign: Sign) -> ActiveOrder {
        ActiveOrder {
            order_id: 0,
            n_so_far: n,
            theta_estimate: theta,
            sign,
            v_mean: 1.0,
        }
    }

    #[test]
    fn ar_coefficients() {
        let a = ArCoefficients::new(0.2, 1, false).unwrap();
        assert!((a.a[0] - 0.2).abs() < 1e-15);
        // integral comparison: 1 - (K+1)^-phi <= sum <= phi + 1 - K^-phi
        let k = 1_000_000usize;
        let a = ArCoefficients::new(0.2, k, false).unwrap();
        let s: f64 = a.a.iter().sum();
        let (kf, phi) = (k as f64, 0.2);
        assert!(
            s >= 1.0 - (kf + 1.0).powf(-phi) && s <= phi + 1.0 - kf.powf(-phi),
            "{s}"
        );
        let a = ArCoefficients::new(0.18, 1000, true).unwrap();
        assert!((a.a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(
            ArCoefficients::new(0.0, 10, false),
            Err(Error::PhiOutOfRange(_))
        ));
    }

    #[test]
    fn e1_lambda() {
        let mut st = E1State::new(ArCoefficients::new(0.2, 5, false).unwrap());
        assert!(matches!(st.lambda(), Err(Error::EmptyHistory)));
        st.push(1.0, 0.01);
        assert!((st.lambda().unwrap() - 0.002).abs() < 1e-15);

        let mut st = E1State::new(ArCoefficients::new(0.3, 50, true).unwrap());
        for _ in 0..50 {
            st.push(1.0, 0.7);
        }
        assert!((st.lambda().unwrap() - 0.7).abs() < 1e-12);
        assert!((st.predict_sign().unwrap() - 1.0).abs() < 1e-12);
        st.push(1.0, 0.7);
        assert_eq!(st.len(), 50);
    }

    #[test]
    fn e2_lambda() {
        let f = ImpactFunction::new(0.01, 0.0).unwrap();
        assert_eq!(lambda_e2(&[], 1.6, &f).unwrap(), 0.0);
        let v = [active(1, 2.0, Sign::Buy)];
        assert!((lambda_e2(&v, 1.0, &f).unwrap() - 0.0025).abs() < 1e-15);
        let v = [active(3, 4.0, Sign::Buy), active(3, 4.0, Sign::Sell)];
        assert_eq!(lambda_e2(&v, 1.6, &f).unwrap(), 0.0);
        assert!(matches!(
            lambda_e2(&[active(1, 0.5, Sign::Buy)], 1.6, &f),
            Err(Error::BadOrderState(_))
        ));
        let single = [active(1, 1.0, Sign::Buy)];
        assert!((predict_sign_e2(&single, 1.6).unwrap() - 0.5f64.powf(1.6)).abs() < 1e-15);
    }

    #[test]
    fn e1_series_matches_rolling_state() {
        let coeffs = ArCoefficients::new(0.25, 7, true).unwrap();
        let x: Vec<f64> = (0..40).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let trace = lambda_series_e1(&coeffs, &x);
        let mut st = E1State::new(coeffs);
        for (i, &xi) in x.iter().enumerate() {
            let expect = st.lambda().unwrap_or(0.0);
            assert!((trace[i] - expect).abs() < 1e-12, "{i}");
            st.push(1.0, xi);
        }
    }

    #[test]
    fn e1_series_fft_matches_direct() {
        let coeffs = ArCoefficients::new(0.3, 3000, true).unwrap();
        let x: Vec<f64> = (0..5000)
            .map(|i| if (i * 7919) % 11 < 5 { 1.0 } else { -1.0 })
            .collect();
        let direct = lambda_series_e1(&coeffs, &x);
        let mut big = x.clone();
        big.extend(std::iter::repeat_n(0.0, 5000));
        let fft = lambda_series_e1(&coeffs, &big);
        for i in 0..5000 {
            assert!((direct[i] - fft[i]).abs() < 1e-12, "{i}");
        }
    }

    #[test]
    fn sign_maps() {
        assert!((continuation_probability(1, 1.6) - 0.3299).abs() < 1e-4);
        let (pp, pm) = prob_sign(0.6).unwrap();
        assert!((pp - 0.8).abs() < 1e-15 && (pm - 0.2).abs() < 1e-15);
        assert_eq!(pp + pm, 1.0);
        assert_eq!(prob_sign(1.0).unwrap(), (1.0, 0.0));
        assert!(prob_sign(1.5).is_err());
        assert_eq!(efficiency_ratio(0.0).unwrap(), 1.0);
        assert!((efficiency_ratio(0.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(efficiency_ratio(1.0), Err(Error::DegenerateCertainty)));
    }
}
