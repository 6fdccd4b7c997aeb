//! Order-flow analytics and a synthetic market for studying hidden orders,
//! price impact and market efficiency in transaction time.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimators;
pub mod hidden_orders;
pub mod imbalance;
pub mod impact;
pub mod liquidity;
pub mod orderflow;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use estimators::{AcfEstimate, ExponentSet, PowerLawFit, TailFit};
pub use hidden_orders::{ActiveOrder, ActivityMode, HiddenOrder, HiddenOrderSet};
pub use imbalance::{DecayProfile, ImbalanceTable, ImpactCurve};
pub use impact::{HiddenOrderImpactCurve, ImpactFunction};
pub use liquidity::{ArCoefficients, Predictor};
pub use orderflow::{ReturnSeries, Sign, Transaction, TransactionSeries};
pub use simulator::{SimConfig, SimOutput};
