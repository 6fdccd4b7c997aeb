//! Transaction data model, CSV ingestion and the three per-transaction
//! return series.
//!
//! A transaction carries the log midprice immediately before and
//! immediately after it executes. From these the one-transaction return
//! `r[i] = pre[i+1] - pre[i]` splits into the initial impact
//! `l[i] = post[i] - pre[i]` and the quote revision `q[i] = pre[i+1] - post[i]`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Transaction sign: `+1` for buyer-initiated, `-1` for seller-initiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Buy,
    Sell,
}

impl Sign {
    pub fn from_i64(v: i64) -> Option<Self> {
        match v {
            1 => Some(Sign::Buy),
            -1 => Some(Sign::Sell),
            _ => None,
        }
    }

    /// Sign of a real number; `None` for zero or NaN.
    pub fn of(x: f64) -> Option<Self> {
        if x > 0.0 {
            Some(Sign::Buy)
        } else if x < 0.0 {
            Some(Sign::Sell)
        } else {
            None
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Buy => 1,
            Sign::Sell => -1,
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.as_i8())
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Buy => Sign::Sell,
            Sign::Sell => Sign::Buy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub index: usize,
    pub broker: String,
    pub sign: Sign,
    pub volume: f64,
    pub log_mid_pre: f64,
    pub log_mid_post: f64,
}

/// Validated, contiguously indexed sequence of transactions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransactionSeries {
    transactions: Vec<Transaction>,
}

impl TransactionSeries {
    /// Validates and renumbers indices `0..n`.
    pub fn new(mut transactions: Vec<Transaction>) -> Result<Self> {
        if transactions.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (i, t) in transactions.iter_mut().enumerate() {
            let line = i as u64 + 2;
            if !(t.volume > 0.0 && t.volume.is_finite()) {
                return Err(Error::MalformedRow {
                    line,
                    reason: format!("volume must be positive, got {}", t.volume),
                });
            }
            if !t.log_mid_pre.is_finite() || !t.log_mid_post.is_finite() {
                return Err(Error::NonFinitePrice { line });
            }
            t.index = i;
        }
        Ok(Self { transactions })
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn get(&self, i: usize) -> Option<&Transaction> {
        self.transactions.get(i)
    }

    pub fn signs(&self) -> Vec<f64> {
        self.transactions.iter().map(|t| t.sign.value()).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.transactions.iter().map(|t| t.volume).collect()
    }
}

/// Delimited text layout of a transaction file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FormatSpec {
    pub delimiter: u8,
}

impl Default for FormatSpec {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

pub const TRANSACTION_HEADER: [&str; 6] = ["i", "broker", "sign", "volume", "log_mid_pre", "log_mid_post"];

/// Parses a header-bearing transaction file. File order is preserved and
/// indices are renumbered from zero.
pub fn parse_transactions<R: Read>(source: R, format: FormatSpec) -> Result<TransactionSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let header = reader.headers()?.clone();
    if header.iter().ne(TRANSACTION_HEADER.iter().copied()) {
        return Err(Error::MalformedRow {
            line: 1,
            reason: format!("expected header {}", TRANSACTION_HEADER.join(",")),
        });
    }

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::MalformedRow {
                line,
                reason: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |reason: String| Error::MalformedRow { line, reason };

        let index: usize = record[0]
            .parse()
            .map_err(|_| bad(format!("bad index {:?}", &record[0])))?;
        let sign = record[2]
            .parse::<i64>()
            .ok()
            .and_then(Sign::from_i64)
            .ok_or_else(|| bad(format!("sign must be 1 or -1, got {:?}", &record[2])))?;
        let volume: f64 = record[3]
            .parse()
            .map_err(|_| bad(format!("bad volume {:?}", &record[3])))?;
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(bad(format!("volume must be positive, got {volume}")));
        }
        let parse_price = |s: &str| -> Result<f64> {
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(Error::NonFinitePrice { line }),
                Err(_) => Err(Error::MalformedRow {
                    line,
                    reason: format!("bad log price {s:?}"),
                }),
            }
        };
        let log_mid_pre = parse_price(&record[4])?;
        let log_mid_post = parse_price(&record[5])?;
        out.push(Transaction {
            index,
            broker: record[1].to_string(),
            sign,
            volume,
            log_mid_pre,
            log_mid_post,
        });
    }
    TransactionSeries::new(out)
}

/// Writes a series in the transaction file format. Reals use the shortest
/// representation that parses back to the same value.
pub fn write_transactions<W: Write>(series: &TransactionSeries, sink: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(sink);
    writeln!(w, "{}", TRANSACTION_HEADER.join(","))?;
    for t in series.transactions() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            t.index,
            t.broker,
            t.sign.as_i8(),
            t.volume,
            t.log_mid_pre,
            t.log_mid_post
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One-transaction return, initial impact and quote revision.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub r: Vec<f64>,
    pub l: Vec<f64>,
    pub q: Vec<f64>,
}

impl ReturnSeries {
    /// Number of returns (transactions minus one).
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Derives returns; the last transaction has no following midpoint and is dropped.
pub fn derive_returns(series: &TransactionSeries) -> Result<ReturnSeries> {
    let tx = series.transactions();
    if tx.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: tx.len(),
        });
    }
    let n = tx.len() - 1;
    let mut r = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for w in tx.windows(2) {
        let (cur, next) = (&w[0], &w[1]);
        r.push(next.log_mid_pre - cur.log_mid_pre);
        l.push(cur.log_mid_post - cur.log_mid_pre);
        q.push(next.log_mid_pre - cur.log_mid_post);
    }
    Ok(ReturnSeries { r, l, q })
}
