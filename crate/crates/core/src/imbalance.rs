//! Market-efficiency diagnostics: conditional sign probabilities and
//! returns per lag, imbalance ratios, cumulative impact curves, response to
//! the sign predictor, and the hidden-order decay profile.
//!
//! Lag-`k` cells pair a conditioning sign `s_i` with the transaction at
//! `i + k`. `p+(k)` is the fraction of pairs where `eps_{i+k} = s_i`, and
//! `r+(k)`, `r-(k)` are the means of `eps_{i+k} r_{i+k}` over the same- and
//! opposite-sign pairs. With this convention `p+ r+ - p- r-` equals the
//! directed mean `E[s_i r_{i+k}]`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hidden_orders::HiddenOrderSet;
use crate::orderflow::{ReturnSeries, TransactionSeries};
use crate::stats::Moments;

pub const DEFAULT_DECAY_BINS: usize = 20;
pub const DEFAULT_POST_LAGS: usize = 500;
pub const DEFAULT_N_MIN: usize = 20;
pub const MIN_LARGE_ORDERS: usize = 30;
pub const MIN_QUALIFYING_PAIRS: usize = 30;

/// What fixes the reference sign `s_i`.
#[derive(Debug, Clone, Copy)]
pub enum Conditioner<'a> {
    /// The realized sign of transaction `i`.
    ActualSign,
    /// The sign of a predictor value aligned with the transactions; zeros are skipped.
    Predictor(&'a [f64]),
}

/// Per-lag conditional statistics. Cells with no observations hold NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImbalanceTable {
    pub lags: Vec<usize>,
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub r_plus: Vec<f64>,
    pub r_minus: Vec<f64>,
    pub l_plus: Vec<f64>,
    pub l_minus: Vec<f64>,
    pub r_plus_se: Vec<f64>,
    pub r_minus_se: Vec<f64>,
    pub l_plus_se: Vec<f64>,
    pub l_minus_se: Vec<f64>,
    pub n_same: Vec<usize>,
    pub n_opp: Vec<usize>,
    /// Pairs skipped because the predictor was exactly zero.
    pub n_tied: Vec<usize>,
}

impl ImbalanceTable {
    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    /// `p+ r+ - p- r-` at row `row`, treating empty cells as zero weight.
    pub fn directed_return(&self, row: usize) -> f64 {
        weighted_difference(self, row, &self.r_plus, &self.r_minus)
    }

    pub fn directed_impact(&self, row: usize) -> f64 {
        weighted_difference(self, row, &self.l_plus, &self.l_minus)
    }
}

fn weighted_difference(t: &ImbalanceTable, row: usize, plus: &[f64], minus: &[f64]) -> f64 {
    let a = if t.n_same[row] > 0 {
        t.p_plus[row] * plus[row]
    } else {
        0.0
    };
    let b = if t.n_opp[row] > 0 {
        t.p_minus[row] * minus[row]
    } else {
        0.0
    };
    a - b
}

struct LagCell {
    same_r: Moments,
    opp_r: Moments,
    same_l: Moments,
    opp_l: Moments,
    tied: usize,
}

/// Conditional table for lags `0..=k_max`.
pub fn conditional_table(
    series: &TransactionSeries,
    returns: &ReturnSeries,
    conditioner: Conditioner<'_>,
    k_max: usize,
) -> Result<ImbalanceTable> {
    let n = returns.len();
    if series.len() != n + 1 {
        return Err(Error::MisalignedInputs(format!(
            "{} returns for {} transactions",
            n,
            series.len()
        )));
    }
    if n <= k_max {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: k_max + 2,
        });
    }
    let eps = series.signs();
    let s: Vec<f64> = match conditioner {
        Conditioner::ActualSign => eps.clone(),
        Conditioner::Predictor(p) => {
            if p.len() != series.len() {
                return Err(Error::MisalignedInputs(format!(
                    "predictor has {} values for {} transactions",
                    p.len(),
                    series.len()
                )));
            }
            p.iter()
                .map(|&x| {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };

    let cells: Vec<LagCell> = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let mut c = LagCell {
                same_r: Moments::new(),
                opp_r: Moments::new(),
                same_l: Moments::new(),
                opp_l: Moments::new(),
                tied: 0,
            };
            for i in 0..n - k {
                let si = s[i];
                if si == 0.0 {
                    c.tied += 1;
                    continue;
                }
                let j = i + k;
                let er = eps[j] * returns.r[j];
                let el = eps[j] * returns.l[j];
                if eps[j] == si {
                    c.same_r.push(er);
                    c.same_l.push(el);
                } else {
                    c.opp_r.push(er);
                    c.opp_l.push(el);
                }
            }
            c
        })
        .collect();

    let nan_mean = |m: &Moments| m.mean().unwrap_or(f64::NAN);
    let nan_se = |m: &Moments| m.stderr().unwrap_or(f64::NAN);
    let mut t = ImbalanceTable {
        lags: (0..=k_max).collect(),
        p_plus: Vec::with_capacity(k_max + 1),
        p_minus: Vec::with_capacity(k_max + 1),
        r_plus: Vec::with_capacity(k_max + 1),
        r_minus: Vec::with_capacity(k_max + 1),
        l_plus: Vec::with_capacity(k_max + 1),
        l_minus: Vec::with_capacity(k_max + 1),
        r_plus_se: Vec::with_capacity(k_max + 1),
        r_minus_se: Vec::with_capacity(k_max + 1),
        l_plus_se: Vec::with_capacity(k_max + 1),
        l_minus_se: Vec::with_capacity(k_max + 1),
        n_same: Vec::with_capacity(k_max + 1),
        n_opp: Vec::with_capacity(k_max + 1),
        n_tied: Vec::with_capacity(k_max + 1),
    };
    for c in cells {
        let (ns, no) = (c.same_r.count(), c.opp_r.count());
        let total = (ns + no) as f64;
        let (pp, pm) = if ns + no > 0 {
            (ns as f64 / total, no as f64 / total)
        } else {
            (f64::NAN, f64::NAN)
        };
        t.p_plus.push(pp);
        t.p_minus.push(pm);
        t.r_plus.push(nan_mean(&c.same_r));
        t.r_minus.push(nan_mean(&c.opp_r));
        t.l_plus.push(nan_mean(&c.same_l));
        t.l_minus.push(nan_mean(&c.opp_l));
        t.r_plus_se.push(nan_se(&c.same_r));
        t.r_minus_se.push(nan_se(&c.opp_r));
        t.l_plus_se.push(nan_se(&c.same_l));
        t.l_minus_se.push(nan_se(&c.opp_l));
        t.n_same.push(ns);
        t.n_opp.push(no);
        t.n_tied.push(c.tied);
    }
    Ok(t)
}

/// The three imbalances at one lag, with propagated standard errors.
/// Ratios with a nonpositive denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImbalanceRatios {
    pub k: usize,
    pub transaction: Option<f64>,
    pub transaction_se: Option<f64>,
    pub ret: Option<f64>,
    pub ret_se: Option<f64>,
    pub liquidity: Option<f64>,
    pub liquidity_se: Option<f64>,
}

impl ImbalanceRatios {
    /// `|r-/r+ - p+/p-|` and its standard error (independent errors added in quadrature).
    pub fn return_gap(&self) -> Option<(f64, f64)> {
        let (a, b) = (self.ret?, self.transaction?);
        let (sa, sb) = (self.ret_se?, self.transaction_se?);
        Some(((a - b).abs(), sa.hypot(sb)))
    }
}

fn ratio(num: f64, den: f64, se_num: f64, se_den: f64) -> (Option<f64>, Option<f64>) {
    if !(den > 0.0) || !num.is_finite() {
        return (None, None);
    }
    let r = num / den;
    let se = (se_num / den).hypot(num * se_den / (den * den));
    (Some(r), se.is_finite().then_some(se))
}

pub fn imbalance_ratios(table: &ImbalanceTable) -> Vec<ImbalanceRatios> {
    (0..table.len())
        .map(|row| {
            let n = (table.n_same[row] + table.n_opp[row]) as f64;
            let (pp, pm) = (table.p_plus[row], table.p_minus[row]);
            // p- = 1 - p+, so d(p+/p-)/dp+ = 1/p-^2
            let (transaction, transaction_se) = if pm > 0.0 {
                let se_p = (pp * pm / n).sqrt();
                (Some(pp / pm), Some(se_p / (pm * pm)))
            } else {
                (None, None)
            };
            let (ret, ret_se) = ratio(
                table.r_minus[row],
                table.r_plus[row],
                table.r_minus_se[row],
                table.r_plus_se[row],
            );
            let (liquidity, liquidity_se) = ratio(
                table.l_minus[row],
                table.l_plus[row],
                table.l_minus_se[row],
                table.l_plus_se[row],
            );
            ImbalanceRatios {
                k: table.lags[row],
                transaction,
                transaction_se,
                ret,
                ret_se,
                liquidity,
                liquidity_se,
            }
        })
        .collect()
}

/// Cumulative price response curves over horizons `0..=t_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactCurve {
    pub horizons: Vec<usize>,
    pub i: Vec<f64>,
    pub i_n: Vec<f64>,
    pub i_l: Vec<f64>,
    pub i_o: f64,
}

/// Unconditional mean absolute initial impact.
pub fn mean_abs_initial_impact(returns: &ReturnSeries) -> f64 {
    returns.l.iter().map(|l| l.abs()).sum::<f64>() / returns.len() as f64
}

/// Prefix sums of `p+ r+ - p- r-`, `I_o (p+ - p-)` and `p+ l+ - p- l-`.
pub fn cumulative_impacts(table: &ImbalanceTable, i_o: f64, t_max: usize) -> Result<ImpactCurve> {
    if table.lags.first() != Some(&0) {
        return Err(Error::MissingLagZero);
    }
    if t_max >= table.len() {
        return Err(Error::LagTooLarge {
            max_lag: t_max,
            len: table.len(),
        });
    }
    let mut curve = ImpactCurve {
        horizons: (0..=t_max).collect(),
        i: Vec::with_capacity(t_max + 1),
        i_n: Vec::with_capacity(t_max + 1),
        i_l: Vec::with_capacity(t_max + 1),
        i_o,
    };
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for row in 0..=t_max {
        a += table.directed_return(row);
        let dp = table.p_plus[row] - table.p_minus[row];
        if dp.is_finite() {
            b += i_o * dp;
        }
        c += table.directed_impact(row);
        curve.i.push(a);
        curve.i_n.push(b);
        curve.i_l.push(c);
    }
    Ok(curve)
}

/// One equal-count bin of the predictor-response curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseBin {
    /// Mean predictor value in the bin.
    pub center: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub r_plus_se: f64,
    pub r_minus_se: f64,
    /// `r+ / r-`, NaN when `r-` is not positive.
    pub ratio: f64,
    pub ratio_se: f64,
    /// `(1 - c)/(1 + c)` at the center clipped to `[-1, 1]`.
    pub theory: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseCurve {
    pub k: usize,
    pub bins: Vec<ResponseBin>,
    /// Predictor values outside `[-1, 1]` that were clipped for the theory overlay.
    pub clipped: usize,
}

/// Bins pairs `(eps_hat[i], transaction i + k)` by `eps_hat[i]` into
/// equal-count bins. Within a bin `r+` is the mean return after buys and
/// `r-` the mean of `-r` after sells.
pub fn response_curves(
    series: &TransactionSeries,
    returns: &ReturnSeries,
    eps_hat: &[f64],
    k: usize,
    bins: usize,
) -> Result<ResponseCurve> {
    if eps_hat.len() != series.len() || returns.len() + 1 != series.len() {
        return Err(Error::MisalignedInputs(format!(
            "predictor {} / returns {} / transactions {}",
            eps_hat.len(),
            returns.len(),
            series.len()
        )));
    }
    let n = returns.len().saturating_sub(k);
    if bins == 0 || n < 2 * bins {
        return Err(Error::TooFewObservations(format!("{n} pairs for {bins} bins")));
    }
    let eps = series.signs();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eps_hat[a].total_cmp(&eps_hat[b]).then(a.cmp(&b)));

    // equal-count cuts, widened so tied predictor values share a bin
    let mut cuts = vec![0];
    for b in 1..bins {
        let mut c = b * n / bins;
        if c <= *cuts.last().unwrap() {
            continue;
        }
        while c < n && eps_hat[idx[c]] == eps_hat[idx[c - 1]] {
            c += 1;
        }
        if c < n && c > *cuts.last().unwrap() {
            cuts.push(c);
        }
    }
    cuts.push(n);
    cuts.dedup();

    let clipped = idx.iter().filter(|&&i| eps_hat[i].abs() > 1.0).count();
    let mut out = Vec::with_capacity(cuts.len() - 1);
    for w in cuts.windows(2) {
        let members = &idx[w[0]..w[1]];
        let center = members.iter().map(|&i| eps_hat[i]).sum::<f64>() / members.len() as f64;
        let mut plus = Moments::new();
        let mut minus = Moments::new();
        for &i in members {
            let j = i + k;
            if eps[j] > 0.0 {
                plus.push(returns.r[j]);
            } else {
                minus.push(-returns.r[j]);
            }
        }
        let rp = plus.mean().unwrap_or(f64::NAN);
        let rm = minus.mean().unwrap_or(f64::NAN);
        let sp = plus.stderr().unwrap_or(f64::NAN);
        let sm = minus.stderr().unwrap_or(f64::NAN);
        let (ratio_v, ratio_se) = ratio(rp, rm, sp, sm);
        let c = center.clamp(-1.0, 1.0);
        out.push(ResponseBin {
            center,
            r_plus: rp,
            r_minus: rm,
            r_plus_se: sp,
            r_minus_se: sm,
            ratio: ratio_v.unwrap_or(f64::NAN),
            ratio_se: ratio_se.unwrap_or(f64::NAN),
            theory: if c > -1.0 {
                (1.0 - c) / (1.0 + c)
            } else {
                f64::INFINITY
            },
            count: members.len(),
        });
    }
    Ok(ResponseCurve {
        k,
        bins: out,
        clipped,
    })
}

/// Mean directed cumulative impact of large hidden orders before and after completion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayProfile {
    /// Fractions of the order duration at which `pre` is sampled.
    pub pre_fractions: Vec<f64>,
    pub pre: Vec<f64>,
    pub pre_se: Vec<f64>,
    /// Lags after the last piece, `1..=post_k`.
    pub post_lags: Vec<usize>,
    pub post: Vec<f64>,
    pub post_se: Vec<f64>,
    pub post_count: Vec<usize>,
    /// Mean of per-order `P(end + post_k) - P(end)` over orders with a full
    /// post window, and its standard error.
    pub post_drift: f64,
    pub post_drift_se: f64,
    pub n_min: usize,
    pub order_count: usize,
    /// Mean duration `t_end - t_start` of the orders used.
    pub mean_duration: f64,
}

/// For each order with `N >= n_min`, the path `P(t) = eps * sum_{s=start}^{t} r_s`
/// is sampled at `start + floor(m * (end - start) / 20)` for `m = 1..=20` and at
/// `end + k` for `k = 1..=post_k`, then averaged across orders.
pub fn decay_profile(
    series: &TransactionSeries,
    returns: &ReturnSeries,
    orders: &HiddenOrderSet,
    n_min: usize,
    post_k: usize,
) -> Result<DecayProfile> {
    if returns.len() + 1 != series.len() || orders.transaction_count() != series.len() {
        return Err(Error::MisalignedInputs(
            "orders, returns and series differ in length".into(),
        ));
    }
    let nr = returns.len();
    let large: Vec<_> = orders
        .orders
        .iter()
        .filter(|o| o.n() >= n_min && o.end() < nr)
        .collect();
    if large.len() < MIN_LARGE_ORDERS {
        return Err(Error::TooFewLargeOrders {
            found: large.len(),
            n_min,
            needed: MIN_LARGE_ORDERS,
        });
    }
    // prefix sums so P(t) = prefix[t+1] - prefix[start]
    let mut prefix = Vec::with_capacity(nr + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for r in &returns.r {
        acc += r;
        prefix.push(acc);
    }

    let fractions: Vec<f64> = (1..=DEFAULT_DECAY_BINS)
        .map(|m| m as f64 / DEFAULT_DECAY_BINS as f64)
        .collect();
    let mut pre = vec![Moments::new(); fractions.len()];
    let mut post = vec![Moments::new(); post_k];
    let mut drift = Moments::new();
    let mut dur = 0.0;
    for o in &large {
        let eps = o.sign.value();
        let (s, e) = (o.start(), o.end());
        let d = e - s;
        dur += d as f64;
        let path = |t: usize| eps * (prefix[t + 1] - prefix[s]);
        for (m, acc) in pre.iter_mut().enumerate() {
            acc.push(path(s + (m + 1) * d / DEFAULT_DECAY_BINS));
        }
        for (k, acc) in post.iter_mut().enumerate() {
            let t = e + k + 1;
            if t >= nr {
                break;
            }
            acc.push(path(t));
        }
        if post_k > 0 && e + post_k < nr {
            drift.push(path(e + post_k) - path(e));
        }
    }
    let mean = |m: &Moments| m.mean().unwrap_or(f64::NAN);
    let se = |m: &Moments| m.stderr().unwrap_or(f64::NAN);
    Ok(DecayProfile {
        pre: pre.iter().map(mean).collect(),
        pre_se: pre.iter().map(se).collect(),
        pre_fractions: fractions,
        post_lags: (1..=post_k).collect(),
        post: post.iter().map(mean).collect(),
        post_se: post.iter().map(se).collect(),
        post_count: post.iter().map(Moments::count).collect(),
        post_drift: mean(&drift),
        post_drift_se: se(&drift),
        n_min,
        order_count: large.len(),
        mean_duration: dur / large.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiResponse {
    pub k: usize,
    pub mean: f64,
    pub stderr: f64,
    pub pairs: usize,
}

/// Mean of `eps_{i-k} r_i` over pairs whose hidden order (the one holding
/// transaction `i - k`) finished before `i`.
pub fn phi_conditioned_response(
    series: &TransactionSeries,
    returns: &ReturnSeries,
    orders: &HiddenOrderSet,
    k: usize,
) -> Result<PhiResponse> {
    if returns.len() + 1 != series.len() || orders.transaction_count() != series.len() {
        return Err(Error::MisalignedInputs(
            "orders, returns and series differ in length".into(),
        ));
    }
    let eps = series.signs();
    let mut m = Moments::new();
    for i in k..returns.len() {
        let j = i - k;
        let (o, _) = orders.piece_to_order[j];
        if orders.orders[o].end() < i {
            m.push(eps[j] * returns.r[i]);
        }
    }
    if m.count() < MIN_QUALIFYING_PAIRS {
        return Err(Error::TooFewQualifyingPairs {
            found: m.count(),
            needed: MIN_QUALIFYING_PAIRS,
        });
    }
    Ok(PhiResponse {
        k,
        mean: m.mean().unwrap_or(f64::NAN),
        stderr: m.stderr().unwrap_or(f64::NAN),
        pairs: m.count(),
    })
}

pub fn write_table_csv<W: Write>(table: &ImbalanceTable, sink: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(sink);
    writeln!(w, "k,p_plus,p_minus,r_plus,r_minus,l_plus,l_minus,n_same,n_opp")?;
    for row in 0..table.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            table.lags[row],
            table.p_plus[row],
            table.p_minus[row],
            table.r_plus[row],
            table.r_minus[row],
            table.l_plus[row],
            table.l_minus[row],
            table.n_same[row],
            table.n_opp[row]
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_impact_curve_csv<W: Write>(curve: &ImpactCurve, sink: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(sink);
    writeln!(w, "T,I,I_N,I_L")?;
    for (row, t) in curve.horizons.iter().enumerate() {
        writeln!(w, "{},{},{},{}", t, curve.i[row], curve.i_n[row], curve.i_l[row])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_response_csv<W: Write>(curve: &ResponseCurve, sink: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(sink);
    writeln!(w, "bin_center,r_plus,r_minus,ratio,theory,count")?;
    for b in &curve.bins {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            b.center, b.r_plus, b.r_minus, b.ratio, b.theory, b.count
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Pre-completion rows use `k = -(1 - f) * mean_duration`; post rows use raw lags.
pub fn write_decay_csv<W: Write>(profile: &DecayProfile, sink: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(sink);
    writeln!(w, "k,mean_impact,stderr,phase")?;
    for (m, f) in profile.pre_fractions.iter().enumerate() {
        let k = -(1.0 - f) * profile.mean_duration;
        writeln!(w, "{},{},{},pre", k, profile.pre[m], profile.pre_se[m])?;
    }
    for (m, k) in profile.post_lags.iter().enumerate() {
        writeln!(w, "{},{},{},post", k, profile.post[m], profile.post_se[m])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orderflow::{derive_returns, Sign, Transaction};

    fn series(signs: &[i64], r: &[f64]) -> (TransactionSeries, ReturnSeries) {
        // r has one fewer entry than signs; l = r, q = 0
        let mut pre = 0.0;
        let mut tx = Vec::new();
        for (i, &s) in signs.iter().enumerate() {
            let step = r.get(i).copied().unwrap_or(0.0);
            tx.push(Transaction {
                index: i,
                broker: format!("B{i}"),
                sign: Sign::from_i64(s).unwrap(),
                volume: 1.0,
                log_mid_pre: pre,
                log_mid_post: pre + step,
            });
            pre += step;
        }
        let s = TransactionSeries::new(tx).unwrap();
        let rs = derive_returns(&s).unwrap();
        (s, rs)
    }

    #[test]
    fn toy_table_matches_hand_enumeration() {
        let signs = [1, 1, -1, 1, -1, -1];
        let r = [0.1, 0.2, -0.3, 0.4, -0.5];
        let (s, rs) = series(&signs, &r);
        let t = conditional_table(&s, &rs, Conditioner::ActualSign, 2).unwrap();
        // k = 0: every pair is "same"
        assert_eq!((t.n_same[0], t.n_opp[0]), (5, 0));
        assert!((t.r_plus[0] - 0.3).abs() < 1e-12);
        assert!(t.r_minus[0].is_nan());
        // k = 1: pairs (0,1)s (1,2)o (2,3)o (3,4)o
        assert_eq!((t.n_same[1], t.n_opp[1]), (1, 3));
        assert!((t.r_plus[1] - 0.2).abs() < 1e-12);
        assert!((t.r_minus[1] - (0.3 + 0.4 + 0.5) / 3.0).abs() < 1e-12);
        // k = 2: (0,2)o (1,3)s (2,4)s
        assert_eq!((t.n_same[2], t.n_opp[2]), (2, 1));
        assert!((t.p_plus[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!((t.r_plus[2] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn predictor_zeros_are_skipped() {
        let signs = [1, 1, -1, 1, -1, -1];
        let r = [0.1, 0.2, -0.3, 0.4, -0.5];
        let (s, rs) = series(&signs, &r);
        let p = [0.0, 0.3, -0.2, 0.0, 0.1, 0.0];
        let t = conditional_table(&s, &rs, Conditioner::Predictor(&p), 1).unwrap();
        assert_eq!(t.n_tied[0], 2);
        assert_eq!(t.n_same[0] + t.n_opp[0] + t.n_tied[0], 5);
        assert!(conditional_table(&s, &rs, Conditioner::Predictor(&p[..3]), 1).is_err());
        assert!(matches!(
            conditional_table(&s, &rs, Conditioner::ActualSign, 5),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn ratios_by_hand() {
        let t = ImbalanceTable {
            lags: vec![1],
            p_plus: vec![0.6],
            p_minus: vec![0.4],
            r_plus: vec![2.0],
            r_minus: vec![3.0],
            l_plus: vec![1.0],
            l_minus: vec![-1.0],
            r_plus_se: vec![0.1],
            r_minus_se: vec![0.1],
            l_plus_se: vec![0.1],
            l_minus_se: vec![0.1],
            n_same: vec![60],
            n_opp: vec![40],
            n_tied: vec![0],
        };
        let r = imbalance_ratios(&t)[0];
        assert!((r.transaction.unwrap() - 1.5).abs() < 1e-12);
        assert!((r.ret.unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(r.liquidity, Some(-1.0));
        let (gap, _) = r.return_gap().unwrap();
        assert!(gap < 1e-12);
        assert!(matches!(
            cumulative_impacts(&t, 1.0, 0),
            Err(Error::MissingLagZero)
        ));
    }

    #[test]
    fn cumulative_matches_double_loop() {
        let signs = [1, -1, -1, 1, 1, 1, -1, 1];
        let r = [0.3, -0.1, 0.05, 0.2, -0.4, 0.1, 0.25];
        let (s, rs) = series(&signs, &r);
        let t = conditional_table(&s, &rs, Conditioner::ActualSign, 4).unwrap();
        let c = cumulative_impacts(&t, mean_abs_initial_impact(&rs), 4).unwrap();
        let mut acc = 0.0;
        for k in 0..=4 {
            let pairs = rs.len() - k;
            let sum: f64 = (0..pairs).map(|i| signs[i] as f64 * r[i + k]).sum();
            acc += sum / pairs as f64;
            assert!((c.i[k] - acc).abs() < 1e-12);
        }
        // I(0) = p+(0) r+(0) and I_N(0) = I_o
        assert!((c.i[0] - t.r_plus[0]).abs() < 1e-15);
        assert_eq!(c.i_n[0], c.i_o);
    }

    #[test]
    fn response_constant_predictor_single_bin() {
        let signs: Vec<i64> = (0..200).map(|i| if i % 3 == 0 { -1 } else { 1 }).collect();
        let r: Vec<f64> = signs[..199].iter().map(|&s| s as f64 * 0.01).collect();
        let (s, rs) = series(&signs, &r);
        let p = vec![0.0; 200];
        let c = response_curves(&s, &rs, &p, 0, 5).unwrap();
        assert_eq!(c.bins.len(), 1);
        assert!((c.bins[0].ratio - 1.0).abs() < 1e-12);
        assert_eq!(c.bins[0].theory, 1.0);
    }

    #[test]
    fn decay_pre_bins_follow_hand_resampling() {
        // one buy order of 20 pieces at 0..=19, each raising the price by 0.01,
        // replicated 30 times with gaps so each order is separate
        let mut labels = Vec::new();
        let mut signs = Vec::new();
        let mut r = Vec::new();
        for j in 0..30 {
            for _ in 0..20 {
                labels.push(j);
                signs.push(1);
                r.push(0.01);
            }
            for g in 0..10 {
                labels.push(1000 + j * 10 + g);
                signs.push(1);
                r.push(0.0);
            }
        }
        r.pop();
        let (s, rs) = series(&signs, &r);
        let set = HiddenOrderSet::from_labels(&s, &labels).unwrap();
        let d = decay_profile(&s, &rs, &set, 20, 5).unwrap();
        assert_eq!(d.order_count, 30);
        for (m, f) in d.pre_fractions.iter().enumerate() {
            // duration 19: sample at floor(f * 19), path includes that step
            let expected = ((f * 19.0).floor() + 1.0) * 0.01;
            assert!((d.pre[m] - expected).abs() < 1e-12, "{m}");
        }
        assert!((d.post[0] - 0.2).abs() < 1e-12);
        assert!(matches!(
            decay_profile(&s, &rs, &set, 21, 5),
            Err(Error::TooFewLargeOrders { .. })
        ));
    }

    #[test]
    fn phi_response_requires_completed_orders() {
        let signs = vec![1; 50];
        let r = vec![0.0; 49];
        let (s, rs) = series(&signs, &r);
        let set = HiddenOrderSet::from_labels(&s, &vec![0; 50]).unwrap();
        assert!(matches!(
            phi_conditioned_response(&s, &rs, &set, 1),
            Err(Error::TooFewQualifyingPairs { .. })
        ));
    }
}
