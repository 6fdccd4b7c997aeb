//! Hidden-order (metaorder) reconstruction from broker-tagged transactions
//! and the per-time activity bookkeeping the liquidity predictors need.
//!
//! Two transactions belong to the same hidden order when they share broker
//! and sign and are linked by a chain of same-broker, same-sign transactions
//! whose consecutive gaps, counted in global transaction time, never exceed
//! the window.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::estimators::{self, AcfEstimate};
use crate::orderflow::{Sign, TransactionSeries};

pub const DEFAULT_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenOrder {
    pub id: usize,
    pub broker: String,
    pub sign: Sign,
    /// Transaction indices of the pieces, strictly increasing.
    pub piece_times: Vec<usize>,
    pub v_mean: f64,
    /// Mean gap between consecutive pieces; for singletons a fallback pace.
    pub theta: f64,
}

impl HiddenOrder {
    pub fn n(&self) -> usize {
        self.piece_times.len()
    }

    pub fn start(&self) -> usize {
        self.piece_times[0]
    }

    pub fn end(&self) -> usize {
        *self.piece_times.last().expect("orders have at least one piece")
    }
}

/// Orders indexed by start time plus the transaction -> (order, piece) map.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenOrderSet {
    pub orders: Vec<HiddenOrder>,
    /// For each transaction: `(order id, 1-based piece number)`.
    pub piece_to_order: Vec<(usize, usize)>,
    /// Mean inter-piece gap over all multi-piece orders.
    pub mean_gap: f64,
}

impl HiddenOrderSet {
    /// Builds a set from per-transaction order labels. Orders are renumbered
    /// by first appearance. `theta` values are the mean inter-piece gap,
    /// with singletons given the mean over their broker-sign chain when one
    /// exists and the global mean gap otherwise.
    pub fn from_labels(series: &TransactionSeries, labels: &[usize]) -> Result<Self> {
        if labels.len() != series.len() {
            return Err(Error::MisalignedInputs(format!(
                "{} labels for {} transactions",
                labels.len(),
                series.len()
            )));
        }
        let tx = series.transactions();
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut orders: Vec<HiddenOrder> = Vec::new();
        let mut piece_to_order = Vec::with_capacity(labels.len());
        for (i, &label) in labels.iter().enumerate() {
            let id = *remap.entry(label).or_insert_with(|| {
                orders.push(HiddenOrder {
                    id: orders.len(),
                    broker: tx[i].broker.clone(),
                    sign: tx[i].sign,
                    piece_times: Vec::new(),
                    v_mean: 0.0,
                    theta: f64::NAN,
                });
                orders.len() - 1
            });
            let o = &mut orders[id];
            if o.sign != tx[i].sign {
                return Err(Error::MisalignedInputs(format!(
                    "order {label} mixes signs at transaction {i}"
                )));
            }
            o.piece_times.push(i);
            o.v_mean += tx[i].volume;
            piece_to_order.push((id, o.piece_times.len()));
        }

        let mut gap_sum = 0.0;
        let mut gap_count = 0usize;
        for o in orders.iter_mut() {
            o.v_mean /= o.n() as f64;
            if o.n() >= 2 {
                o.theta = (o.end() - o.start()) as f64 / (o.n() - 1) as f64;
                gap_sum += (o.end() - o.start()) as f64;
                gap_count += o.n() - 1;
            }
        }
        let mean_gap = if gap_count > 0 {
            gap_sum / gap_count as f64
        } else {
            1.0
        };

        // singleton pace: mean gap of the broker-sign chain
        let mut chains: HashMap<(&str, Sign), (usize, usize, usize)> = HashMap::new();
        for t in tx {
            let e = chains
                .entry((t.broker.as_str(), t.sign))
                .or_insert((t.index, t.index, 0));
            e.1 = t.index;
            e.2 += 1;
        }
        let chain_gap: HashMap<(String, Sign), f64> = chains
            .into_iter()
            .filter(|(_, (_, _, c))| *c >= 2)
            .map(|((b, s), (first, last, c))| ((b.to_string(), s), (last - first) as f64 / (c - 1) as f64))
            .collect();
        for o in orders.iter_mut().filter(|o| o.n() == 1) {
            o.theta = chain_gap
                .get(&(o.broker.clone(), o.sign))
                .copied()
                .unwrap_or(mean_gap)
                .max(1.0);
        }

        Ok(Self {
            orders,
            piece_to_order,
            mean_gap,
        })
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Number of transactions covered.
    pub fn transaction_count(&self) -> usize {
        self.piece_to_order.len()
    }

    pub fn order_of(&self, i: usize) -> Option<&HiddenOrder> {
        self.piece_to_order.get(i).map(|&(j, _)| &self.orders[j])
    }
}

/// Single left-to-right pass over `(broker, sign)` chains.
pub fn reconstruct(series: &TransactionSeries, window: usize) -> Result<HiddenOrderSet> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut open: HashMap<(&str, Sign), (usize, usize)> = HashMap::new();
    let mut labels = Vec::with_capacity(series.len());
    let mut next_label = 0usize;
    for t in series.transactions() {
        let key = (t.broker.as_str(), t.sign);
        let label = match open.get(&key) {
            Some(&(label, last)) if t.index - last <= window => label,
            _ => {
                next_label += 1;
                next_label - 1
            }
        };
        open.insert(key, (label, t.index));
        labels.push(label);
    }
    HiddenOrderSet::from_labels(series, &labels)
}

/// Order sizes `N` as reals, for tail fitting.
pub fn size_samples(orders: &HiddenOrderSet) -> Vec<f64> {
    orders.orders.iter().map(|o| o.n() as f64).collect()
}

/// ACF of the signed size sequence `sign * N` in order-start order.
pub fn signed_size_acf(orders: &HiddenOrderSet, max_lag: usize) -> Result<AcfEstimate> {
    if orders.len() < max_lag + 2 {
        return Err(Error::LagTooLarge {
            max_lag,
            len: orders.len(),
        });
    }
    let x: Vec<f64> = orders
        .orders
        .iter()
        .map(|o| o.sign.value() * o.n() as f64)
        .collect();
    estimators::acf(&x, max_lag)
}

/// How order completion is judged at time `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivityMode {
    /// Active while `start <= i < last piece`, using the full record.
    Hindsight,
    /// Active while `start <= i` and the latest piece is at most `timeout` old.
    Causal { timeout: usize },
}

/// Which pace estimate an activity view reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaSource {
    /// `(last piece so far - start) / (pieces so far - 1)`, global mean gap for one piece.
    Running,
    /// The order's pace over its whole lifetime.
    FullRecord,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveOrder {
    pub order_id: usize,
    pub n_so_far: usize,
    pub theta_estimate: f64,
    pub sign: Sign,
    pub v_mean: f64,
}

fn running_theta(orders: &HiddenOrderSet, start: usize, last: usize, n: usize) -> f64 {
    if n >= 2 {
        (last - start) as f64 / (n - 1) as f64
    } else {
        orders.mean_gap
    }
}

/// Orders active at transaction `i`, in order-id order.
pub fn activity_at(orders: &HiddenOrderSet, i: usize, mode: ActivityMode) -> Result<Vec<ActiveOrder>> {
    let len = orders.transaction_count();
    if i >= len {
        return Err(Error::IndexOutOfRange { index: i, len });
    }
    let mut out = Vec::new();
    for o in &orders.orders {
        if o.start() > i {
            // orders are sorted by start
            break;
        }
        let n_so_far = o.piece_times.partition_point(|&t| t <= i);
        let last = o.piece_times[n_so_far - 1];
        let active = match mode {
            ActivityMode::Hindsight => i < o.end(),
            ActivityMode::Causal { timeout } => i - last <= timeout,
        };
        if active {
            out.push(ActiveOrder {
                order_id: o.id,
                n_so_far,
                theta_estimate: running_theta(orders, o.start(), last, n_so_far),
                sign: o.sign,
                v_mean: o.v_mean,
            });
        }
    }
    Ok(out)
}

/// Incremental activity view, advanced one transaction at a time.
///
/// Produces the same sets as [`activity_at`] for `ThetaSource::Running`.
#[derive(Debug, Clone)]
pub struct ActivitySweep<'a> {
    orders: &'a HiddenOrderSet,
    mode: ActivityMode,
    theta: ThetaSource,
    next: usize,
    // order id -> (pieces so far, last piece time)
    live: BTreeMap<usize, (usize, usize)>,
    view: Vec<ActiveOrder>,
}

impl<'a> ActivitySweep<'a> {
    pub fn new(orders: &'a HiddenOrderSet, mode: ActivityMode, theta: ThetaSource) -> Self {
        Self {
            orders,
            mode,
            theta,
            next: 0,
            live: BTreeMap::new(),
            view: Vec::new(),
        }
    }

    /// Index of the next transaction `advance` will absorb.
    pub fn position(&self) -> usize {
        self.next
    }

    /// Absorbs transaction `self.position()` and returns the active view at it.
    pub fn advance(&mut self) -> Result<&[ActiveOrder]> {
        let i = self.next;
        let &(j, n) = self.orders.piece_to_order.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.orders.transaction_count(),
        })?;
        self.next += 1;
        self.live.insert(j, (n, i));

        let orders = self.orders;
        match self.mode {
            ActivityMode::Hindsight => {
                if n == orders.orders[j].n() {
                    self.live.remove(&j);
                }
            }
            ActivityMode::Causal { timeout } => {
                self.live.retain(|_, &mut (_, last)| i - last <= timeout);
            }
        }

        self.view.clear();
        for (&id, &(n_so_far, last)) in &self.live {
            let o = &orders.orders[id];
            let theta_estimate = match self.theta {
                ThetaSource::Running => running_theta(orders, o.start(), last, n_so_far),
                ThetaSource::FullRecord => o.theta,
            };
            self.view.push(ActiveOrder {
                order_id: id,
                n_so_far,
                theta_estimate,
                sign: o.sign,
                v_mean: o.v_mean,
            });
        }
        Ok(&self.view)
    }
}

pub const ORDERS_HEADER: &str = "order_id,sign,N,v_mean,theta,t_start,t_end";
pub const PIECES_HEADER: &str = "i,order_id,n";

pub fn write_orders<W: Write>(orders: &HiddenOrderSet, sink: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(sink);
    writeln!(w, "{ORDERS_HEADER}")?;
    for o in &orders.orders {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            o.id,
            o.sign.as_i8(),
            o.n(),
            o.v_mean,
            o.theta,
            o.start(),
            o.end()
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_pieces<W: Write>(orders: &HiddenOrderSet, sink: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(sink);
    writeln!(w, "{PIECES_HEADER}")?;
    for (i, (j, n)) in orders.piece_to_order.iter().enumerate() {
        writeln!(w, "{i},{j},{n}")?;
    }
    w.flush()?;
    Ok(())
}

/// Rebuilds an order set from an exported piece map and its order table.
/// The order table supplies `theta` so ground-truth paces survive the round trip.
pub fn read_order_set<R1: Read, R2: Read>(
    series: &TransactionSeries,
    pieces: R1,
    orders_csv: R2,
) -> Result<HiddenOrderSet> {
    let mut labels = Vec::with_capacity(series.len());
    let mut rdr = csv::Reader::from_reader(pieces);
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row as u64 + 2;
        let bad = |what: &str| Error::MalformedRow {
            line,
            reason: format!("bad {what}"),
        };
        let i: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("i"))?;
        let j: usize = rec
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("order_id"))?;
        if i != labels.len() {
            return Err(bad("i (pieces must be listed in transaction order)"));
        }
        labels.push(j);
    }
    let mut set = HiddenOrderSet::from_labels(series, &labels)?;

    let mut thetas: HashMap<usize, f64> = HashMap::new();
    let mut rdr = csv::Reader::from_reader(orders_csv);
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed = (
            rec.get(0).and_then(|s| s.parse::<usize>().ok()),
            rec.get(4).and_then(|s| s.parse::<f64>().ok()),
        );
        match parsed {
            (Some(id), Some(theta)) => {
                thetas.insert(id, theta);
            }
            _ => {
                return Err(Error::MalformedRow {
                    line: row as u64 + 2,
                    reason: "bad order row".into(),
                })
            }
        }
    }
    // ids in the file are first-appearance ordered, as are ours
    for o in set.orders.iter_mut() {
        let label = labels[o.start()];
        if let Some(&t) = thetas.get(&label) {
            o.theta = t;
        }
    }
    Ok(set)
}
