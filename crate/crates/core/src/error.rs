use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    // ingestion
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("non-finite log midprice at line {line}")]
    NonFinitePrice { line: u64 },
    #[error("input contains no transactions")]
    EmptyInput,
    #[error("series too short: need at least {needed} transactions, got {got}")]
    TooShort { needed: usize, got: usize },

    // estimators
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("lag {max_lag} too large for series of length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("only {found} strictly positive values in fit range (need 5)")]
    InsufficientPositivePoints { found: usize },
    #[error("too few tail samples: {n} (need at least 10)")]
    TooFewTailSamples { n: usize },
    #[error("tail fraction {0} outside (0, 0.05]")]
    FractionOutOfRange(f64),
    #[error("sample {0} is not strictly positive")]
    NonPositiveSample(f64),
    #[error("all tail samples equal the threshold; log-sum is zero")]
    ZeroLogSum,
    #[error("series of length {len} too short for periodogram (need {needed})")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("Hurst exponent {0} outside (0.5, 1)")]
    HOutOfRange(f64),

    // impact and liquidity
    #[error("too few observations: {0}")]
    TooFewObservations(String),
    #[error("phi {0} outside (0, 0.5)")]
    PhiOutOfRange(f64),
    #[error("alpha {0} must exceed 1")]
    AlphaOutOfRange(f64),
    #[error("invalid impact function: {0}")]
    InvalidImpactFunction(String),
    #[error("inputs are misaligned: {0}")]
    MisalignedInputs(String),
    #[error("transaction index {index} out of range for series of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("predictor history is empty")]
    EmptyHistory,
    #[error("bad active-order state: {0}")]
    BadOrderState(String),
    #[error("sign predictor {0} outside [-1, 1]")]
    EpsHatOutOfRange(f64),
    #[error("sign predictor is certain (|eps_hat| = 1); ratio undefined")]
    DegenerateCertainty,

    // imbalance diagnostics
    #[error("imbalance table has no lag-zero row")]
    MissingLagZero,
    #[error("only {found} orders with N >= {n_min} (need {needed})")]
    TooFewLargeOrders {
        found: usize,
        n_min: usize,
        needed: usize,
    },
    #[error("only {found} qualifying pairs (need {needed})")]
    TooFewQualifyingPairs { found: usize, needed: usize },

    // simulator
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("liquidity rule state error: {0}")]
    RuleStateError(String),
    #[error("noise calibration could not bracket target {0}")]
    BracketFailure(f64),
    #[error("run too short: {got} transactions (need {needed})")]
    RunTooShort { got: usize, needed: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
