use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mimpact::estimators::{DEFAULT_FIT_RANGE, DEFAULT_PERIODOGRAM_BAND, DEFAULT_TAIL_FRACTION};
use mimpact::hidden_orders::DEFAULT_WINDOW;
use mimpact::imbalance::{DEFAULT_N_MIN, DEFAULT_POST_LAGS};
use mimpact::liquidity::DEFAULT_AR_LAGS;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "mimpact",
    version,
    about = "Order-flow, impact and liquidity analysis"
)]
pub struct Cli {
    /// Output directory
    #[arg(long, global = true, default_value = "mimpact-out")]
    pub out: PathBuf,
    /// Overrides the seed of any configuration
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for per-lag work (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Autocorrelation of a transaction column with a power-law fit
    Acf(AcfArgs),
    /// Hill estimate of a tail exponent
    Tail(TailArgs),
    /// Hurst exponent of the sign series from the low-frequency periodogram
    Hurst(HurstArgs),
    /// Exponent set derived from H (given or estimated)
    Params(ParamsArgs),
    /// Volume-dependent impact function fit
    ImpactFn(ImpactFnArgs),
    /// Hidden-order reconstruction from broker tags
    HiddenOrders(HiddenOrdersArgs),
    /// Conditional return and impact table with imbalance ratios
    Imbalance(ImbalanceArgs),
    /// Cumulative impact curves
    CumImpact(CumImpactArgs),
    /// Return response binned by the sign predictor
    Response(ResponseArgs),
    /// Pre- and post-completion impact profile of large hidden orders
    Decay(DecayArgs),
    /// Simulated order flow and returns
    Simulate(SimulateArgs),
    /// Stylized-facts report for a simulation output directory
    StylizedFacts(StylizedFactsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Acf(_) => "acf",
            Command::Tail(_) => "tail",
            Command::Hurst(_) => "hurst",
            Command::Params(_) => "params",
            Command::ImpactFn(_) => "impact-fn",
            Command::HiddenOrders(_) => "hidden-orders",
            Command::Imbalance(_) => "imbalance",
            Command::CumImpact(_) => "cum-impact",
            Command::Response(_) => "response",
            Command::Decay(_) => "decay",
            Command::Simulate(_) => "simulate",
            Command::StylizedFacts(_) => "stylized-facts",
        }
    }
}

/// Transaction file, or a directory holding `transactions.csv` and
/// optionally ground-truth `orders.csv` / `pieces.csv`.
#[derive(Debug, Args, Serialize)]
pub struct Input {
    /// Transaction CSV or simulation output directory
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Field delimiter of the transaction file
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesColumn {
    Sign,
    Return,
    AbsReturn,
    Volume,
}

#[derive(Debug, Args, Serialize)]
pub struct AcfArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum, default_value_t = SeriesColumn::Sign)]
    pub column: SeriesColumn,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_lag: u64,
    /// Smallest lag of the power-law fit
    #[arg(long, default_value_t = DEFAULT_FIT_RANGE.0)]
    pub fit_min: usize,
    /// Largest lag of the power-law fit (clipped to --max-lag)
    #[arg(long, default_value_t = DEFAULT_FIT_RANGE.1)]
    pub fit_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailColumn {
    Volume,
    AbsReturn,
    /// Piece counts of the hidden orders
    OrderSize,
}

#[derive(Debug, Args, Serialize)]
pub struct TailArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum, default_value_t = TailColumn::Volume)]
    pub column: TailColumn,
    /// Share of the largest samples used
    #[arg(long, default_value_t = DEFAULT_TAIL_FRACTION)]
    pub fraction: f64,
    /// Reconstruction window for order-size (ignored when ground truth is present)
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct HurstArgs {
    #[command(flatten)]
    pub input: Input,
    /// Share of the lowest Fourier frequencies used
    #[arg(long, default_value_t = DEFAULT_PERIODOGRAM_BAND)]
    pub band: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ParamsArgs {
    /// Hurst exponent; estimated from --in when absent
    #[arg(long, conflicts_with = "gamma")]
    pub hurst: Option<f64>,
    /// Sign-ACF decay exponent, as an alternative to --hurst
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Transaction CSV to estimate H from
    #[arg(long = "in", value_name = "PATH", required_unless_present_any = ["hurst", "gamma"])]
    pub input: Option<PathBuf>,
    /// Share of the lowest Fourier frequencies used
    #[arg(long, default_value_t = DEFAULT_PERIODOGRAM_BAND)]
    pub band: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct ImpactFnArgs {
    #[command(flatten)]
    pub input: Input,
    /// Log-spaced volume bins
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    /// Fit only transactions with nonzero immediate impact
    #[arg(long)]
    pub nonzero: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct HiddenOrdersArgs {
    #[command(flatten)]
    pub input: Input,
    /// Largest gap (in transactions) between pieces of one order
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_TAIL_FRACTION)]
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Mode {
    /// Condition on the realized sign
    #[value(name = "none")]
    #[serde(rename = "none")]
    None,
    #[value(name = "E1")]
    E1,
    #[value(name = "E2")]
    E2,
}

/// Predictor settings shared by imbalance and response.
#[derive(Debug, Args, Serialize)]
pub struct PredictorArgs {
    /// Hurst exponent for the predictor; estimated from the signs when absent
    #[arg(long)]
    pub hurst: Option<f64>,
    /// Autoregressive lags of the E1 predictor
    #[arg(long, default_value_t = DEFAULT_AR_LAGS)]
    pub ar_lags: usize,
    /// Reconstruction window for E2 (also its activity timeout)
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ImbalanceArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum, default_value_t = Mode::None)]
    pub mode: Mode,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_lag: u64,
    #[command(flatten)]
    pub predictor: PredictorArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CumImpactArgs {
    #[command(flatten)]
    pub input: Input,
    /// Largest horizon T
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_lag: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ResponseArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum, default_value_t = Mode::E2)]
    pub mode: Mode,
    /// Lag between the prediction and the response
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Equal-count predictor bins
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    #[command(flatten)]
    pub predictor: PredictorArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct DecayArgs {
    #[command(flatten)]
    pub input: Input,
    /// Smallest order size included
    #[arg(long, default_value_t = DEFAULT_N_MIN)]
    pub n_min: usize,
    /// Lags sampled after completion
    #[arg(long, default_value_t = DEFAULT_POST_LAGS)]
    pub post_lags: usize,
    /// Lags of the completed-order response
    #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Key-value configuration; defaults apply to missing keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the number of transactions
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct StylizedFactsArgs {
    /// Directory written by `simulate`
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
}
