use mimpact::estimators::{self, ExponentSet};
use mimpact::hidden_orders::{self, ActivityMode, HiddenOrderSet};
use mimpact::imbalance::{self, Conditioner};
use mimpact::impact;
use mimpact::liquidity::{self, ArCoefficients};
use mimpact::orderflow::{self, ReturnSeries};
use mimpact::simulator::{self, Estimate, SimConfig, SimOutput};
use mimpact::{TailFit, TransactionSeries};
use serde::Serialize;

use crate::args::*;
use crate::output::{self, Run};
use crate::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut run = Run::new(&cli.out)?;
    match &cli.command {
        Command::Acf(a) => acf(&mut run, a)?,
        Command::Tail(a) => tail(&mut run, a)?,
        Command::Hurst(a) => hurst(&mut run, a)?,
        Command::Params(a) => params(&mut run, a)?,
        Command::ImpactFn(a) => impact_fn(&mut run, a)?,
        Command::HiddenOrders(a) => hidden(&mut run, a)?,
        Command::Imbalance(a) => imbalance_table(&mut run, a)?,
        Command::CumImpact(a) => cum_impact(&mut run, a)?,
        Command::Response(a) => response(&mut run, a)?,
        Command::Decay(a) => decay(&mut run, a)?,
        Command::Simulate(a) => simulate(&mut run, a, cli.seed)?,
        Command::StylizedFacts(a) => stylized_facts(&mut run, a)?,
    }
    run.finish(cli.command.name(), &cli.command)
}

fn lag(v: u64) -> usize {
    usize::try_from(v).unwrap_or(usize::MAX)
}

fn acf(run: &mut Run, a: &AcfArgs) -> Result<(), CliError> {
    let data = output::load(run, &a.input.input, a.input.delimiter)?;
    let x: Vec<f64> = match a.column {
        SeriesColumn::Sign => data.series.signs(),
        SeriesColumn::Volume => data.series.volumes(),
        SeriesColumn::Return => orderflow::derive_returns(&data.series)?.r,
        SeriesColumn::AbsReturn => orderflow::derive_returns(&data.series)?
            .r
            .iter()
            .map(|r| r.abs())
            .collect(),
    };
    let max_lag = lag(a.max_lag);
    let est = estimators::acf(&x, max_lag)?;
    run.write_json("acf.json", &est)?;
    let fit = estimators::fit_power_law_decay(&est, a.fit_min, a.fit_max.min(max_lag))?;
    run.write_json("fit.json", &fit)
}

fn tail(run: &mut Run, a: &TailArgs) -> Result<(), CliError> {
    let data = output::load(run, &a.input.input, a.input.delimiter)?;
    let samples: Vec<f64> = match a.column {
        TailColumn::Volume => data.series.volumes(),
        TailColumn::AbsReturn => orderflow::derive_returns(&data.series)?
            .r
            .iter()
            .map(|r| r.abs())
            .filter(|r| *r > 0.0)
            .collect(),
        TailColumn::OrderSize => hidden_orders::size_samples(&data.orders(a.window)?),
    };
    let fit = estimators::hill_tail(&samples, a.fraction)?;
    run.write_json("tail.json", &fit)
}

#[derive(Serialize)]
struct HurstOut {
    #[serde(rename = "H")]
    h: f64,
    band: f64,
    n: usize,
}

fn hurst(run: &mut Run, a: &HurstArgs) -> Result<(), CliError> {
    let data = output::load(run, &a.input.input, a.input.delimiter)?;
    let signs = data.series.signs();
    let h = estimators::hurst_periodogram_band(&signs, a.band)?;
    run.write_json(
        "hurst.json",
        &HurstOut {
            h,
            band: a.band,
            n: signs.len(),
        },
    )
}

fn params(run: &mut Run, a: &ParamsArgs) -> Result<(), CliError> {
    let set = match (a.hurst, a.gamma, &a.input) {
        (Some(h), _, _) => estimators::derive_exponents(h)?,
        (None, Some(g), _) => estimators::exponents_from_gamma(g)?,
        (None, None, Some(path)) => {
            let data = output::load(run, path, ',')?;
            estimators::derive_exponents(estimators::hurst_periodogram_band(&data.series.signs(), a.band)?)?
        }
        (None, None, None) => {
            return Err(CliError::Usage(
                "one of --hurst, --gamma or --in is required".into(),
            ))
        }
    };
    run.write_json("params.json", &set)
}

fn impact_fn(run: &mut Run, a: &ImpactFnArgs) -> Result<(), CliError> {
    let data = output::load(run, &a.input.input, a.input.delimiter)?;
    let returns = orderflow::derive_returns(&data.series)?;
    let bins = lag(a.bins);
    let fit = if a.nonzero {
        impact::fit_impact_nonzero(&data.series, &returns, bins)?
    } else {
        impact::fit_impact_function(&data.series, &returns, bins)?
    };
    run.write_json("impact_fn.json", &fit)
}

#[derive(Serialize)]
struct OrdersSummary {
    transactions: usize,
    orders: usize,
    mean_gap: f64,
    size_tail: Estimate<TailFit>,
}

fn hidden(run: &mut Run, a: &HiddenOrdersArgs) -> Result<(), CliError> {
    let data = output::load(run, &a.input.input, a.input.delimiter)?;
    let orders = hidden_orders::reconstruct(&data.series, a.window)?;
    run.write_with(output::ORDERS_FILE, |w| hidden_orders::write_orders(&orders, w))?;
    run.write_with(output::PIECES_FILE, |w| hidden_orders::write_pieces(&orders, w))?;
    let sizes = hidden_orders::size_samples(&orders);
    run.write_json(
        "summary.json",
        &OrdersSummary {
            transactions: data.series.len(),
            orders: orders.len(),
            mean_gap: orders.mean_gap,
            size_tail: estimators::hill_tail(&sizes, a.fraction).into(),
        },
    )
}

fn exponents(series: &TransactionSeries, hurst: Option<f64>) -> Result<ExponentSet, CliError> {
    let h = match hurst {
        Some(h) => h,
        None => estimators::hurst_periodogram(&series.signs())?,
    };
    Ok(estimators::derive_exponents(h)?)
}

fn predictor(
    series: &TransactionSeries,
    orders: impl FnOnce() -> Result<HiddenOrderSet, CliError>,
    mode: Mode,
    p: &PredictorArgs,
) -> Result<Option<Vec<f64>>, CliError> {
    match mode {
        Mode::None => Ok(None),
        Mode::E1 => {
            let set = exponents(series, p.hurst)?;
            let coeffs = ArCoefficients::new(set.phi, p.ar_lags, true)?;
            Ok(Some(liquidity::predictor_series_e1(series, &coeffs)))
        }
        Mode::E2 => {
            let set = exponents(series, p.hurst)?;
            let orders = orders()?;
            let mode = ActivityMode::Causal { timeout: p.window };
            Ok(Some(liquidity::predictor_series_e2(&orders, set.alpha, mode)?))
        }
    }
}

fn imbalance_table(run: &mut Run, a: &ImbalanceArgs) -> Result<(), CliError> {
    let data = output::load(run, &a.input.input, a.input.delimiter)?;
    let returns = orderflow::derive_returns(&data.series)?;
    let eps_hat = predictor(
        &data.series,
        || data.orders(a.predictor.window),
        a.mode,
        &a.predictor,
    )?;
    let cond = match &eps_hat {
        Some(p) => Conditioner::Predictor(p),
        None => Conditioner::ActualSign,
    };
    let table = imbalance::conditional_table(&data.series, &returns, cond, lag(a.max_lag))?;
    run.write_with("table.csv", |w| imbalance::write_table_csv(&table, w))?;
    run.write_json("ratios.json", &imbalance::imbalance_ratios(&table))
}

fn cum_impact(run: &mut Run, a: &CumImpactArgs) -> Result<(), CliError> {
    let data = output::load(run, &a.input.input, a.input.delimiter)?;
    let returns = orderflow::derive_returns(&data.series)?;
    let t_max = lag(a.max_lag);
    let table = imbalance::conditional_table(&data.series, &returns, Conditioner::ActualSign, t_max)?;
    let i_o = imbalance::mean_abs_initial_impact(&returns);
    let curve = imbalance::cumulative_impacts(&table, i_o, t_max)?;
    run.write_with("impact_curve.csv", |w| {
        imbalance::write_impact_curve_csv(&curve, w)
    })
}

fn response(run: &mut Run, a: &ResponseArgs) -> Result<(), CliError> {
    let data = output::load(run, &a.input.input, a.input.delimiter)?;
    let returns = orderflow::derive_returns(&data.series)?;
    let eps_hat = predictor(
        &data.series,
        || data.orders(a.predictor.window),
        a.mode,
        &a.predictor,
    )?
    .ok_or_else(|| CliError::Usage("response needs --mode E1 or E2".into()))?;
    let curve = imbalance::response_curves(&data.series, &returns, &eps_hat, a.k, lag(a.bins))?;
    run.write_with("response.csv", |w| imbalance::write_response_csv(&curve, w))
}

#[derive(Serialize)]
struct DecaySummary {
    order_count: usize,
    n_min: usize,
    mean_duration: f64,
    post_drift: f64,
    post_drift_se: f64,
    phi_response: Vec<Estimate<imbalance::PhiResponse>>,
}

fn decay(run: &mut Run, a: &DecayArgs) -> Result<(), CliError> {
    let data = output::load(run, &a.input.input, a.input.delimiter)?;
    let returns = orderflow::derive_returns(&data.series)?;
    let orders = data.orders(a.window)?;
    let profile = imbalance::decay_profile(&data.series, &returns, &orders, a.n_min, a.post_lags)?;
    run.write_with("decay.csv", |w| imbalance::write_decay_csv(&profile, w))?;
    let phi_response =
        a.k.iter()
            .map(|&k| imbalance::phi_conditioned_response(&data.series, &returns, &orders, k).into())
            .collect();
    run.write_json(
        "decay.json",
        &DecaySummary {
            order_count: profile.order_count,
            n_min: profile.n_min,
            mean_duration: profile.mean_duration,
            post_drift: profile.post_drift,
            post_drift_se: profile.post_drift_se,
            phi_response,
        },
    )
}

fn simulate(run: &mut Run, a: &SimulateArgs, seed: Option<u64>) -> Result<(), CliError> {
    let mut config = match &a.config {
        Some(path) => {
            let bytes = run.read(path)?;
            let text = String::from_utf8(bytes)
                .map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))?;
            SimConfig::parse(&text)?
        }
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(steps) = a.steps {
        config.steps = steps;
    }
    config.validate()?;
    run.seed = Some(config.seed);
    let out = simulator::simulate(&config)?;
    run.write_with(output::TRANSACTIONS_FILE, |w| {
        orderflow::write_transactions(&out.series, w)
    })?;
    run.write_with(output::ORDERS_FILE, |w| {
        hidden_orders::write_orders(&out.orders, w)
    })?;
    run.write_with(output::PIECES_FILE, |w| {
        hidden_orders::write_pieces(&out.orders, w)
    })?;
    run.write(output::CONFIG_FILE, config.to_config_string().as_bytes())
}

fn stylized_facts(run: &mut Run, a: &StylizedFactsArgs) -> Result<(), CliError> {
    if !a.input.is_dir() {
        return Err(CliError::Usage(format!(
            "{} is not a simulation output directory",
            a.input.display()
        )));
    }
    let data = output::load(run, &a.input, ',')?;
    let orders = match data.truth {
        Some(o) => o,
        None => {
            return Err(CliError::Usage(format!(
                "{} has no {} / {}",
                a.input.display(),
                output::ORDERS_FILE,
                output::PIECES_FILE
            )))
        }
    };
    let cfg = a.input.join(output::CONFIG_FILE);
    if cfg.exists() {
        let text = run.read(&cfg)?;
        if let Ok(c) = SimConfig::parse(&String::from_utf8_lossy(&text)) {
            run.seed = Some(c.seed);
        }
    }
    let returns: ReturnSeries = orderflow::derive_returns(&data.series)?;
    // the report reads only series, returns and orders
    let sim = SimOutput {
        series: data.series,
        returns,
        orders,
        lambda: Vec::new(),
        expected_impact: None,
    };
    let report = simulator::stylized_facts_report(&sim)?;
    run.write_json("stylized_facts.json", &report)
}
