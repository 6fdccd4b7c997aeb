//! Synthetic market: hidden-order flow in the Lillo-Mike-Farmer style plus
//! the return model `r = eps f(v) - lambda + eta` with a pluggable
//! liquidity rule.
//!
//! The flow runs on ticks. A new hidden order arrives with probability
//! `order_start_prob` per tick and fires its first piece immediately; after
//! that it fires with probability `1/theta` per tick. When several orders fire
//! on one tick one is chosen uniformly and the rest stay pending for the next
//! tick, so every piece is eventually emitted. Ticks on which nothing fires
//! emit nothing and do not advance transaction time.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{self, PowerLawFit, TailFit};
use crate::hidden_orders::{ActivityMode, ActivitySweep, HiddenOrderSet, ThetaSource};
use crate::impact::ImpactFunction;
use crate::liquidity::{self, ArCoefficients};
use crate::orderflow::{self, ReturnSeries, Sign, Transaction, TransactionSeries};
use crate::stats;

const FLOW_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const IMPACT_STREAM: u64 = 2;

/// Tolerance for the per-step check of the E2 liquidity trace.
pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const MIN_REPORT_LEN: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Fixed(f64),
    LogUniform { lo: f64, hi: f64 },
}

impl Dist {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Dist::Fixed(x) => x,
            Dist::LogUniform { lo, hi } => {
                let u: f64 = rng.random();
                (lo.ln() + u * (hi.ln() - lo.ln())).exp()
            }
        }
    }

    fn lower_bound(&self) -> f64 {
        match *self {
            Dist::Fixed(x) => x,
            Dist::LogUniform { lo, .. } => lo,
        }
    }

    fn is_valid(&self) -> bool {
        match *self {
            Dist::Fixed(x) => x.is_finite() && x > 0.0,
            Dist::LogUniform { lo, hi } => lo > 0.0 && hi >= lo && hi.is_finite(),
        }
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dist::Fixed(x) => write!(f, "fixed:{x}"),
            Dist::LogUniform { lo, hi } => write!(f, "loguniform:{lo}:{hi}"),
        }
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::ConfigInvalid(format!("{what}: cannot parse {s:?} as a number")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::ConfigInvalid(format!("{what}: cannot parse {s:?} as an integer")))
}

impl FromStr for Dist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["fixed", x] => Ok(Dist::Fixed(parse_f64(x, "fixed")?)),
            ["loguniform", lo, hi] => Ok(Dist::LogUniform {
                lo: parse_f64(lo, "loguniform")?,
                hi: parse_f64(hi, "loguniform")?,
            }),
            _ => Err(Error::ConfigInvalid(format!("unknown distribution {s:?}"))),
        }
    }
}

/// How a transaction's impact is realized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImpactMechanism {
    /// Every transaction moves the price by `eps f(v)`.
    Deterministic,
    /// A transaction moves the price by `eps * magnitude` with probability
    /// `f(v) / magnitude`, and not at all otherwise.
    Probabilistic { magnitude: f64 },
}

impl fmt::Display for ImpactMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImpactMechanism::Deterministic => write!(f, "deterministic"),
            ImpactMechanism::Probabilistic { magnitude } => write!(f, "probabilistic:{magnitude}"),
        }
    }
}

impl FromStr for ImpactMechanism {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.split(':').collect::<Vec<_>>().as_slice() {
            ["deterministic"] => Ok(ImpactMechanism::Deterministic),
            ["probabilistic", m] => Ok(ImpactMechanism::Probabilistic {
                magnitude: parse_f64(m, "impact_mechanism")?,
            }),
            _ => Err(Error::ConfigInvalid(format!("unknown impact mechanism {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiquidityRule {
    None,
    /// Autoregressive liquidity with weights normalized over `k` lags.
    E1 {
        phi: f64,
        k: usize,
    },
    E2(ActivityMode),
}

impl fmt::Display for LiquidityRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiquidityRule::None => write!(f, "none"),
            LiquidityRule::E1 { phi, k } => write!(f, "e1:{phi}:{k}"),
            LiquidityRule::E2(ActivityMode::Hindsight) => write!(f, "e2:hindsight"),
            LiquidityRule::E2(ActivityMode::Causal { timeout }) => write!(f, "e2:causal:{timeout}"),
        }
    }
}

impl FromStr for LiquidityRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.split(':').collect::<Vec<_>>().as_slice() {
            ["none"] => Ok(LiquidityRule::None),
            ["e1", phi] => Ok(LiquidityRule::E1 {
                phi: parse_f64(phi, "e1")?,
                k: liquidity::DEFAULT_AR_LAGS,
            }),
            ["e1", phi, k] => Ok(LiquidityRule::E1 {
                phi: parse_f64(phi, "e1")?,
                k: parse_usize(k, "e1")?,
            }),
            ["e2", "hindsight"] => Ok(LiquidityRule::E2(ActivityMode::Hindsight)),
            ["e2", "causal"] => Ok(LiquidityRule::E2(ActivityMode::Causal {
                timeout: crate::hidden_orders::DEFAULT_WINDOW,
            })),
            ["e2", "causal", t] => Ok(LiquidityRule::E2(ActivityMode::Causal {
                timeout: parse_usize(t, "e2")?,
            })),
            _ => Err(Error::ConfigInvalid(format!("unknown liquidity rule {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub alpha: f64,
    pub order_start_prob: f64,
    pub theta_dist: Dist,
    pub piece_volume_dist: Dist,
    pub impact: ImpactFunction,
    pub impact_mechanism: ImpactMechanism,
    pub noise_sigma: f64,
    pub liquidity_rule: LiquidityRule,
    /// Number of transactions to emit.
    pub steps: usize,
    pub seed: u64,
    /// Every order has exactly this many pieces instead of a power-law size.
    pub fixed_size: Option<usize>,
    /// New arrivals are dropped while this many orders are live.
    pub max_active: Option<usize>,
    /// Power-law sizes are capped here.
    pub max_size: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            alpha: 1.6,
            order_start_prob: 0.1,
            theta_dist: Dist::LogUniform { lo: 1.0, hi: 50.0 },
            piece_volume_dist: Dist::LogUniform {
                lo: 100.0,
                hi: 100_000.0,
            },
            impact: ImpactFunction { f1: 9.4e-5, f2: 0.12 },
            impact_mechanism: ImpactMechanism::Deterministic,
            noise_sigma: 0.0,
            liquidity_rule: LiquidityRule::E2(ActivityMode::Hindsight),
            steps: 100_000,
            seed: 1,
            fixed_size: None,
            max_active: None,
            max_size: None,
        }
    }
}

const CONFIG_KEYS: [&str; 13] = [
    "alpha",
    "order_start_prob",
    "theta_dist",
    "piece_volume_dist",
    "impact",
    "impact_mechanism",
    "noise_sigma",
    "liquidity_rule",
    "steps",
    "seed",
    "fixed_size",
    "max_active",
    "max_size",
];

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return bad(format!("alpha = {} must exceed 1", self.alpha));
        }
        if !(self.order_start_prob > 0.0 && self.order_start_prob < 1.0) {
            return bad(format!(
                "order_start_prob = {} outside (0, 1)",
                self.order_start_prob
            ));
        }
        if !self.theta_dist.is_valid() || self.theta_dist.lower_bound() < 1.0 {
            return bad(format!("theta_dist {} must have support >= 1", self.theta_dist));
        }
        if !self.piece_volume_dist.is_valid() {
            return bad(format!(
                "piece_volume_dist {} must be positive",
                self.piece_volume_dist
            ));
        }
        ImpactFunction::new(self.impact.f1, self.impact.f2)?;
        if let ImpactMechanism::Probabilistic { magnitude } = self.impact_mechanism {
            if !(magnitude > 0.0 && magnitude.is_finite()) {
                return bad(format!("impact magnitude {magnitude} must be positive"));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma = {} must be nonnegative", self.noise_sigma));
        }
        if let LiquidityRule::E1 { phi, k } = self.liquidity_rule {
            ArCoefficients::new(phi, k, true)?;
        }
        if self.steps < 2 {
            return bad("steps must be at least 2".into());
        }
        if self.fixed_size == Some(0) || self.max_active == Some(0) || self.max_size == Some(0) {
            return bad("fixed_size, max_active and max_size must be positive".into());
        }
        Ok(())
    }

    /// Parses a flat `key = value` file. Blank lines and `#` comments are
    /// ignored; missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = SimConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::ConfigInvalid(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "alpha" => c.alpha = parse_f64(value, key)?,
                "order_start_prob" => c.order_start_prob = parse_f64(value, key)?,
                "theta_dist" => c.theta_dist = value.parse()?,
                "piece_volume_dist" => c.piece_volume_dist = value.parse()?,
                "impact" => {
                    let parts: Vec<&str> = value.split(':').collect();
                    match parts.as_slice() {
                        ["power", f1, f2] => {
                            c.impact = ImpactFunction {
                                f1: parse_f64(f1, key)?,
                                f2: parse_f64(f2, key)?,
                            }
                        }
                        _ => {
                            return Err(Error::ConfigInvalid(format!(
                                "impact: expected power:f1:f2, got {value:?}"
                            )))
                        }
                    }
                }
                "impact_mechanism" => c.impact_mechanism = value.parse()?,
                "noise_sigma" => c.noise_sigma = parse_f64(value, key)?,
                "liquidity_rule" => c.liquidity_rule = value.parse()?,
                "steps" => c.steps = parse_usize(value, key)?,
                "seed" => {
                    c.seed = value
                        .parse()
                        .map_err(|_| Error::ConfigInvalid(format!("seed: bad value {value:?}")))?
                }
                "fixed_size" => c.fixed_size = Some(parse_usize(value, key)?),
                "max_active" => c.max_active = Some(parse_usize(value, key)?),
                "max_size" => c.max_size = Some(parse_usize(value, key)?),
                _ => {
                    return Err(Error::ConfigInvalid(format!(
                        "line {}: unknown key {key:?} (known: {})",
                        n + 1,
                        CONFIG_KEYS.join(", ")
                    )))
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Serializes to the format read by [`SimConfig::parse`].
    pub fn to_config_string(&self) -> String {
        let mut s = format!(
            "alpha = {}\norder_start_prob = {}\ntheta_dist = {}\npiece_volume_dist = {}\n\
             impact = power:{}:{}\nimpact_mechanism = {}\nnoise_sigma = {}\n\
             liquidity_rule = {}\nsteps = {}\nseed = {}\n",
            self.alpha,
            self.order_start_prob,
            self.theta_dist,
            self.piece_volume_dist,
            self.impact.f1,
            self.impact.f2,
            self.impact_mechanism,
            self.noise_sigma,
            self.liquidity_rule,
            self.steps,
            self.seed
        );
        for (key, v) in [
            ("fixed_size", self.fixed_size),
            ("max_active", self.max_active),
            ("max_size", self.max_size),
        ] {
            if let Some(v) = v {
                s.push_str(&format!("{key} = {v}\n"));
            }
        }
        s
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Ticks until the next success of a Bernoulli(p) trial, at least 1.
fn ticks_until<R: Rng>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 1;
    }
    Geometric::new(p).expect("probability in (0, 1)").sample(rng) + 1
}

struct LiveOrder {
    sign: Sign,
    remaining: usize,
    fire_prob: f64,
    volume: f64,
}

/// Generates the order flow. The series carries zero prices; brokers are
/// `B{order id}`. The order set is the exact ground truth, with each
/// order's `theta` the realized mean gap in transaction time.
pub fn generate_order_flow(config: &SimConfig) -> Result<(TransactionSeries, HiddenOrderSet)> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, FLOW_STREAM);
    let mut live: Vec<Option<LiveOrder>> = Vec::new();
    let mut live_count = 0usize;
    let mut scheduled: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let mut pending: Vec<usize> = Vec::new();
    let mut firing: Vec<usize> = Vec::new();
    let mut next_arrival = ticks_until(config.order_start_prob, &mut rng) - 1;
    let mut tick = 0u64;
    let mut tx = Vec::with_capacity(config.steps);
    let mut labels = Vec::with_capacity(config.steps);
    let mut emitted_id: Vec<Option<usize>> = Vec::new();
    let mut next_label = 0usize;

    while tx.len() < config.steps {
        tick = if pending.is_empty() {
            let next_fire = scheduled.peek().map_or(u64::MAX, |r| r.0 .0);
            next_arrival.min(next_fire)
        } else {
            tick + 1
        };

        firing.clear();
        firing.append(&mut pending);
        while let Some(&Reverse((t, id))) = scheduled.peek() {
            if t != tick {
                break;
            }
            scheduled.pop();
            firing.push(id);
        }
        if next_arrival == tick {
            next_arrival = tick + ticks_until(config.order_start_prob, &mut rng);
            let sign = if rng.random::<bool>() {
                Sign::Buy
            } else {
                Sign::Sell
            };
            let size = match config.fixed_size {
                Some(n) => n,
                None => {
                    let u = 1.0 - rng.random::<f64>();
                    let n = u.powf(-1.0 / config.alpha).floor();
                    let cap = config.max_size.unwrap_or(usize::MAX) as f64;
                    n.min(cap) as usize
                }
            };
            let theta = config.theta_dist.sample(&mut rng);
            let volume = config.piece_volume_dist.sample(&mut rng);
            if config.max_active.is_none_or(|m| live_count < m) {
                let id = live.len();
                live.push(Some(LiveOrder {
                    sign,
                    remaining: size,
                    fire_prob: 1.0 / theta,
                    volume,
                }));
                emitted_id.push(None);
                live_count += 1;
                firing.push(id);
            }
        }
        if firing.is_empty() {
            continue;
        }

        let pick = rng.random_range(0..firing.len());
        let id = firing.swap_remove(pick);
        pending.append(&mut firing);

        let o = live[id].as_mut().expect("firing orders are live");
        // ids follow first emission so they match the order set's numbering
        let label = *emitted_id[id].get_or_insert_with(|| {
            next_label += 1;
            next_label - 1
        });
        tx.push(Transaction {
            index: tx.len(),
            broker: format!("B{label}"),
            sign: o.sign,
            volume: o.volume,
            log_mid_pre: 0.0,
            log_mid_post: 0.0,
        });
        labels.push(label);
        o.remaining -= 1;
        if o.remaining == 0 {
            live[id] = None;
            live_count -= 1;
        } else {
            let p = o.fire_prob;
            scheduled.push(Reverse((tick + ticks_until(p, &mut rng), id)));
        }
    }

    let series = TransactionSeries::new(tx)?;
    let orders = HiddenOrderSet::from_labels(&series, &labels)?;
    Ok((series, orders))
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub series: TransactionSeries,
    pub returns: ReturnSeries,
    pub orders: HiddenOrderSet,
    /// Liquidity term subtracted at each transaction.
    pub lambda: Vec<f64>,
    /// Independently accumulated `sum_j (n_j/(n_j+1))^alpha eps_j f(v_j)/theta_j`
    /// over orders active in hindsight; present for the hindsight E2 rule.
    pub expected_impact: Option<Vec<f64>>,
}

/// Per-transaction sum over active orders, recomputed from the order
/// records rather than the activity sweep.
fn expected_impact_trace(orders: &HiddenOrderSet, alpha: f64, f: &ImpactFunction) -> Vec<f64> {
    let n = orders.transaction_count();
    // (order id, pieces so far), kept in start order
    let mut active: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (j, piece) = orders.piece_to_order[i];
        let o = &orders.orders[j];
        if piece == 1 {
            active.push((j, 1));
        } else if let Some(e) = active.iter_mut().find(|e| e.0 == j) {
            e.1 = piece;
        }
        if piece == o.n() {
            active.retain(|e| e.0 != j);
        }
        let s: f64 = active
            .iter()
            .map(|&(j, m)| {
                let o = &orders.orders[j];
                liquidity::continuation_probability(m, alpha) * o.sign.value() * f.eval(o.v_mean) / o.theta
            })
            .sum();
        out.push(s);
    }
    out
}

fn liquidity_trace(
    series: &TransactionSeries,
    orders: &HiddenOrderSet,
    config: &SimConfig,
) -> Result<Vec<f64>> {
    let f = &config.impact;
    let n = series.len();
    match config.liquidity_rule {
        LiquidityRule::None => Ok(vec![0.0; n]),
        LiquidityRule::E1 { phi, k } => {
            let coeffs = ArCoefficients::new(phi, k, true)?;
            let x: Vec<f64> = series
                .transactions()
                .iter()
                .map(|t| t.sign.value() * f.eval(t.volume))
                .collect();
            Ok(liquidity::lambda_series_e1(&coeffs, &x))
        }
        LiquidityRule::E2(mode) => {
            let source = match mode {
                ActivityMode::Hindsight => ThetaSource::FullRecord,
                ActivityMode::Causal { .. } => ThetaSource::Running,
            };
            let mut sweep = ActivitySweep::new(orders, mode, source);
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let view = sweep
                    .advance()
                    .map_err(|e| Error::RuleStateError(e.to_string()))?;
                out.push(
                    liquidity::lambda_e2(view, config.alpha, f)
                        .map_err(|e| Error::RuleStateError(e.to_string()))?,
                );
            }
            Ok(out)
        }
    }
}

/// Applies the return model to a flow. `l_i = eps_i f(v_i) - lambda_i` (or
/// the probabilistic impact minus `lambda_i`) and `q_i = eta_i`.
pub fn simulate_returns(
    flow: &TransactionSeries,
    orders: &HiddenOrderSet,
    config: &SimConfig,
) -> Result<SimOutput> {
    config.validate()?;
    if orders.transaction_count() != flow.len() {
        return Err(Error::RuleStateError(format!(
            "order set covers {} transactions, flow has {}",
            orders.transaction_count(),
            flow.len()
        )));
    }
    let lambda = liquidity_trace(flow, orders, config)?;
    let expected_impact = match config.liquidity_rule {
        LiquidityRule::E2(ActivityMode::Hindsight) => {
            let trace = expected_impact_trace(orders, config.alpha, &config.impact);
            if let Some(i) = (0..trace.len()).find(|&i| (trace[i] - lambda[i]).abs() > TRACE_TOLERANCE) {
                return Err(Error::RuleStateError(format!(
                    "liquidity {} differs from expected impact {} at step {i}",
                    lambda[i], trace[i]
                )));
            }
            Some(trace)
        }
        _ => None,
    };

    let mut noise = stream_rng(config.seed, NOISE_STREAM);
    let mut coin = stream_rng(config.seed, IMPACT_STREAM);
    let f = &config.impact;
    let mut pre = 0.0f64;
    let mut tx = Vec::with_capacity(flow.len());
    for (t, lam) in flow.transactions().iter().zip(&lambda) {
        let fv = f.eval(t.volume);
        let impact = match config.impact_mechanism {
            ImpactMechanism::Deterministic => fv,
            ImpactMechanism::Probabilistic { magnitude } => {
                let hit = coin.random::<f64>() < fv / magnitude;
                if hit {
                    magnitude
                } else {
                    0.0
                }
            }
        };
        let z: f64 = noise.sample(StandardNormal);
        let post = pre + (t.sign.value() * impact - lam);
        tx.push(Transaction {
            log_mid_pre: pre,
            log_mid_post: post,
            ..t.clone()
        });
        pre = post + config.noise_sigma * z;
    }
    let series = TransactionSeries::new(tx)?;
    let returns = orderflow::derive_returns(&series)?;
    Ok(SimOutput {
        series,
        returns,
        orders: orders.clone(),
        lambda,
        expected_impact,
    })
}

/// Generates a flow and applies the return model.
pub fn simulate(config: &SimConfig) -> Result<SimOutput> {
    let (flow, orders) = generate_order_flow(config)?;
    simulate_returns(&flow, &orders, config)
}

const CALIBRATION_TOLERANCE: f64 = 0.01;
const CALIBRATION_ITERATIONS: usize = 40;

fn abs_return_acf1(flow: &TransactionSeries, orders: &HiddenOrderSet, config: &SimConfig) -> Result<f64> {
    let out = simulate_returns(flow, orders, config)?;
    let abs: Vec<f64> = out.returns.r.iter().map(|r| r.abs()).collect();
    match estimators::acf(&abs, 1) {
        Ok(a) => Ok(a.values[1]),
        Err(Error::ZeroVariance) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Bisects `noise_sigma` so the lag-1 autocorrelation of `|r|` on the
/// probe's fixed seed lands within 0.01 of `target`.
pub fn calibrate_noise(target: f64, probe: &SimConfig) -> Result<f64> {
    if !(target > 0.0 && target < 0.5) {
        return Err(Error::ConfigInvalid(format!(
            "calibration target {target} outside (0, 0.5)"
        )));
    }
    let (flow, orders) = generate_order_flow(probe)?;
    let at = |sigma: f64| {
        let mut c = probe.clone();
        c.noise_sigma = sigma;
        abs_return_acf1(&flow, &orders, &c)
    };
    if at(0.0)? <= target + CALIBRATION_TOLERANCE {
        return Ok(0.0);
    }
    let mut hi = probe.impact.f1;
    let mut doublings = 0;
    while at(hi)? > target {
        hi *= 2.0;
        doublings += 1;
        if doublings > 64 {
            return Err(Error::BracketFailure(target));
        }
    }
    let mut lo = 0.0;
    let mut mid = hi;
    for _ in 0..CALIBRATION_ITERATIONS {
        mid = 0.5 * (lo + hi);
        let g = at(mid)?;
        if (g - target).abs() <= CALIBRATION_TOLERANCE {
            return Ok(mid);
        }
        if g > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnAcfCheck {
    pub lag_min: usize,
    pub lag_max: usize,
    pub max_abs: f64,
    pub white_noise_band: f64,
    pub within_3_bands: bool,
}

/// A sub-estimate that either succeeded or failed with a message.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Estimate<T> {
    Ok(T),
    Failed { error: String },
}

impl<T> From<Result<T>> for Estimate<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Estimate::Ok(v),
            Err(e) => Estimate::Failed { error: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StylizedFacts {
    pub transactions: usize,
    pub return_acf: ReturnAcfCheck,
    /// Hill fit on `|R|` of the hidden orders.
    pub hidden_order_return_tail: Estimate<TailFit>,
    pub abs_return_acf_decay: Estimate<PowerLawFit>,
}

pub fn stylized_facts_report(output: &SimOutput) -> Result<StylizedFacts> {
    let n = output.series.len();
    if n < MIN_REPORT_LEN {
        return Err(Error::RunTooShort {
            got: n,
            needed: MIN_REPORT_LEN,
        });
    }
    let r = &output.returns.r;
    let (lag_min, lag_max) = (20, 200);
    let acf = estimators::acf(r, lag_max)?;
    let max_abs = acf.values[lag_min..=lag_max]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let band = stats::white_noise_band(r.len());

    let tx = output.series.transactions();
    let big_r: Vec<f64> = output
        .orders
        .orders
        .iter()
        .map(|o| (tx[o.end()].log_mid_post - tx[o.start()].log_mid_pre).abs())
        .filter(|x| *x > 0.0)
        .collect();
    let tail = estimators::hill_tail(&big_r, estimators::DEFAULT_TAIL_FRACTION).into();

    let abs: Vec<f64> = r.iter().map(|x| x.abs()).collect();
    let (lo, hi) = estimators::DEFAULT_FIT_RANGE;
    let decay = estimators::acf(&abs, hi)
        .and_then(|a| estimators::fit_power_law_decay(&a, lo, hi))
        .into();

    Ok(StylizedFacts {
        transactions: n,
        return_acf: ReturnAcfCheck {
            lag_min,
            lag_max,
            max_abs,
            white_noise_band: band,
            within_3_bands: max_abs <= 3.0 * band,
        },
        hidden_order_return_tail: tail,
        abs_return_acf_decay: decay,
    })
}
