//! Command-line front end: quote validation, wing extrapolation, model
//! quote generation, bound computation, sensitivity tables and the bundled
//! experiment reproductions.
//!
//! Exit codes: 0 success, 1 domain/validation failure, 2 I/O or config
//! error, 3 numerical failure.

use clap::{Parser, Subcommand, ValueEnum};
use hedgebound::arbitrage::{feasible_extrapolation_region, validate_quotes};
use hedgebound::experiment::{BsExperiment, HestonExperiment};
use hedgebound::hedge::{
    forward_start_straddle, subhedge, superhedge, InstrumentSet, PayoffSpec, Side, StateGrid,
    StrategyBasis,
};
use hedgebound::heston::{heston_quote_set, HestonQuadratureConfig};
use hedgebound::market::{load_quotes, total_variance, CallQuoteSet, MarketError};
use hedgebound::reference;
use hedgebound::sensitivity::{perturbation_study, PriceFamily, SensitivityReport, StudySetup};
use hedgebound::wing::{
    bs_flat_wing_surface, heston_critical_moment_left, heston_critical_moment_right,
    heston_wing_surface, lee_psi, HestonParams, HestonWingInput, TotalVarianceSurface,
};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

/// Bundled synthetic demonstration quotes (not market data).
pub const SYNTHETIC_DEMO_QUOTES: &str = include_str!("../data/synthetic_demo_quotes.csv");

#[derive(Debug, Parser)]
#[command(name = "hedgebound", about = "Model-independent hedging bounds from call quotes")]
pub struct Cli {
    /// Input quote CSV (`maturity,moneyness,price`).
    #[arg(long, global = true)]
    pub quotes: Option<PathBuf>,
    /// JSON configuration file (command-specific schema).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format where applicable.
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Md,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check quotes for static arbitrage; exit 0 iff clean.
    Validate,
    /// Price target strikes from an extrapolated variance surface.
    Extrapolate,
    /// Generate model quotes into the standard CSV format.
    GenHeston,
    /// Compute one super- or sub-hedging bound.
    Bound {
        #[arg(long, value_enum, default_value_t = PayoffKind::ForwardStartStraddle)]
        payoff: PayoffKind,
        /// Forward-start straddle strike.
        #[arg(long, default_value_t = 1.0)]
        fs_strike: f64,
        /// Maturity index of a traded-call payoff.
        #[arg(long, default_value_t = 0)]
        tc_maturity_index: usize,
        /// Strike of a traded-call payoff.
        #[arg(long, default_value_t = 1.0)]
        tc_strike: f64,
        #[arg(long, value_enum, default_value_t = SideArg::Super)]
        side: SideArg,
        #[arg(long, default_value_t = 500)]
        grid_points: usize,
        #[arg(long, default_value_t = 5.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 4)]
        basis_degree: usize,
        /// Optional CSV dump of the extremal measure (`s1,s2,weight`).
        #[arg(long)]
        measure_out: Option<PathBuf>,
    },
    /// Perturbation table: derivative, re-solved and estimated values.
    Sensitivity {
        #[arg(long, value_enum, default_value_t = SideArg::Super)]
        side: SideArg,
        #[arg(long, default_value_t = 1.0)]
        fs_strike: f64,
        #[arg(long, default_value_t = 500)]
        grid_points: usize,
        #[arg(long, default_value_t = 5.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 4)]
        basis_degree: usize,
        /// JSON file with `[{"label": "...", "parameter": [...]}, ...]`.
        #[arg(long)]
        perturbations: PathBuf,
    },
    /// Re-run a bundled experiment table (1-5) against its published
    /// reference values.
    Reproduce {
        table: u8,
        #[arg(long)]
        grid_points: Option<usize>,
        #[arg(long)]
        grid_max: Option<f64>,
        #[arg(long)]
        basis_degree: Option<usize>,
    },
    /// Emit the feasible-extrapolation envelope of one maturity as CSV.
    FigureRegion {
        /// Maturity to plot (defaults to the first in the input).
        #[arg(long)]
        maturity: Option<f64>,
        /// Use the bundled synthetic demonstration quotes.
        #[arg(long, default_value_t = false)]
        demo: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PayoffKind {
    ForwardStartStraddle,
    Forward,
    TradedCall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Super,
    Sub,
}

impl From<SideArg> for Side {
    fn from(value: SideArg) -> Side {
        match value {
            SideArg::Super => Side::Super,
            SideArg::Sub => Side::Sub,
        }
    }
}

// Everything funnels into exit codes here.
enum Failure {
    Domain(String),
    Io(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Io(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Domain(m) | Failure::Io(m) | Failure::Numerical(m) => m,
        }
    }
}

fn market_failure(e: MarketError) -> Failure {
    match e {
        MarketError::Csv { .. } | MarketError::InvalidQuote { .. } | MarketError::NoQuotes => {
            Failure::Io(e.to_string())
        }
        other => Failure::Domain(other.to_string()),
    }
}

fn hedge_failure(e: hedgebound::hedge::HedgeError) -> Failure {
    use hedgebound::hedge::HedgeError::*;
    match e {
        ArbitrageInInputs { .. } | MeasureInfeasible | Domain(_) | Assembly(_) => {
            Failure::Domain(e.to_string())
        }
        PayoffNotDominated => Failure::Numerical(e.to_string()),
        Lp(inner) => Failure::Numerical(inner.to_string()),
    }
}

/// Run a parsed command, returning the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Failure> {
    match &cli.command {
        Command::Validate => cmd_validate(&cli),
        Command::Extrapolate => cmd_extrapolate(&cli),
        Command::GenHeston => cmd_gen_heston(&cli),
        Command::Bound { .. } => cmd_bound(&cli),
        Command::Sensitivity { .. } => cmd_sensitivity(&cli),
        Command::Reproduce { .. } => cmd_reproduce(&cli),
        Command::FigureRegion { .. } => cmd_figure_region(&cli),
    }
}

fn read_quotes(cli: &Cli) -> Result<CallQuoteSet, Failure> {
    let path = cli
        .quotes
        .as_ref()
        .ok_or_else(|| Failure::Io("--quotes is required".into()))?;
    let file = fs::File::open(path)
        .map_err(|e| Failure::Io(format!("cannot open {}: {e}", path.display())))?;
    load_quotes(file).map_err(market_failure)
}

fn read_config_value(cli: &Cli) -> Result<serde_json::Value, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Io("--config is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Io(format!("config parse error: {e}")))
}

fn write_output(cli: &Cli, content: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_validate(cli: &Cli) -> Result<i32, Failure> {
    let quotes = read_quotes(cli)?;
    let report = validate_quotes(&quotes);
    let json = serde_json::json!({
        "passed": report.passed,
        "violations": report.violations,
    });
    write_output(cli, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))?;
    Ok(if report.passed { 0 } else { 1 })
}

#[derive(Debug, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
enum ExtrapolateConfig {
    Bs {
        sigma: f64,
        /// One symmetric wing slope per maturity of the input quotes.
        slopes: Vec<f64>,
        target_strikes: Vec<f64>,
    },
    Heston {
        /// `[q, p]` moment orders per maturity of the input quotes.
        moment_orders: Vec<[f64; 2]>,
        target_strikes: Vec<f64>,
    },
}

fn surface_from_config(
    config: &ExtrapolateConfig,
    quotes: &CallQuoteSet,
) -> Result<TotalVarianceSurface, Failure> {
    match config {
        ExtrapolateConfig::Bs { sigma, slopes, .. } => {
            if slopes.len() != quotes.maturities().len() {
                return Err(Failure::Io(format!(
                    "{} slopes for {} maturities",
                    slopes.len(),
                    quotes.maturities().len()
                )));
            }
            let pairs: Vec<(f64, f64)> = quotes
                .maturities()
                .iter()
                .copied()
                .zip(slopes.iter().copied())
                .collect();
            bs_flat_wing_surface(*sigma, &pairs).map_err(|e| Failure::Domain(e.to_string()))
        }
        ExtrapolateConfig::Heston { moment_orders, .. } => {
            if moment_orders.len() != quotes.maturities().len() {
                return Err(Failure::Io(format!(
                    "{} moment-order pairs for {} maturities",
                    moment_orders.len(),
                    quotes.maturities().len()
                )));
            }
            let mut inputs = Vec::new();
            for (i, &t) in quotes.maturities().iter().enumerate() {
                let mut region = Vec::new();
                for q in quotes.quotes_at(i) {
                    let k = q.log_moneyness();
                    let w = total_variance(k, q.price).map_err(market_failure)?;
                    region.push((k, w));
                }
                inputs.push(HestonWingInput {
                    maturity: t,
                    quoted: region,
                    q: moment_orders[i][0],
                    p: moment_orders[i][1],
                });
            }
            heston_wing_surface(&inputs).map_err(|e| Failure::Domain(e.to_string()))
        }
    }
}

fn cmd_extrapolate(cli: &Cli) -> Result<i32, Failure> {
    let quotes = read_quotes(cli)?;
    let config: ExtrapolateConfig = serde_json::from_value(read_config_value(cli)?)
        .map_err(|e| Failure::Io(format!("config parse error: {e}")))?;
    let surface = surface_from_config(&config, &quotes)?;
    let target = match &config {
        ExtrapolateConfig::Bs { target_strikes, .. }
        | ExtrapolateConfig::Heston { target_strikes, .. } => target_strikes.clone(),
    };
    let mut out = String::from("maturity,moneyness,price,total_variance\n");
    for (i, slice) in surface.slices.iter().enumerate() {
        for &strike in &target {
            let k = strike.ln();
            let w = surface.w(i, k);
            let price = hedgebound::market::bs_call_price(k, w.sqrt());
            writeln!(out, "{},{},{:.12},{:.12}", slice.maturity, strike, price, w).unwrap();
        }
    }
    write_output(cli, &out)?;
    Ok(0)
}

#[derive(Debug, Deserialize)]
struct GenHestonConfig {
    params: HestonParams,
    maturities: Vec<f64>,
    strikes: Vec<f64>,
}

fn cmd_gen_heston(cli: &Cli) -> Result<i32, Failure> {
    let config: GenHestonConfig = serde_json::from_value(read_config_value(cli)?)
        .map_err(|e| Failure::Io(format!("config parse error: {e}")))?;
    let quad = HestonQuadratureConfig::default();
    let set = heston_quote_set(&config.params, &config.maturities, &config.strikes, &quad)
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    let mut out = String::from("maturity,moneyness,price\n");
    for q in set.iter() {
        writeln!(out, "{},{},{:.12}", q.maturity, q.moneyness, q.price).unwrap();
    }
    write_output(cli, &out)?;
    Ok(0)
}

fn cmd_bound(cli: &Cli) -> Result<i32, Failure> {
    let Command::Bound {
        payoff,
        fs_strike,
        tc_maturity_index,
        tc_strike,
        side,
        grid_points,
        grid_max,
        basis_degree,
        measure_out,
    } = &cli.command
    else {
        unreachable!()
    };
    let quotes = read_quotes(cli)?;
    let instruments = InstrumentSet::from_quotes(&quotes);
    let grid = StateGrid::uniform(*grid_points, *grid_max, quotes.maturities())
        .map_err(hedge_failure)?;
    let basis = StrategyBasis::monomials(*basis_degree, quotes.maturities().len() - 1);
    let phi = match payoff {
        PayoffKind::ForwardStartStraddle => {
            forward_start_straddle(*fs_strike).map_err(hedge_failure)?
        }
        PayoffKind::Forward => PayoffSpec::Forward,
        PayoffKind::TradedCall => PayoffSpec::TradedCall {
            maturity_index: *tc_maturity_index,
            strike: *tc_strike,
        },
    };
    let (hedge, measure) = match Side::from(*side) {
        Side::Super => superhedge(&phi, &instruments, &basis, &grid).map_err(hedge_failure)?,
        Side::Sub => subhedge(&phi, &instruments, &basis, &grid).map_err(hedge_failure)?,
    };
    if let Some(path) = measure_out {
        let mut csv = String::new();
        let n_mat = grid.maturities().len();
        for i in 1..=n_mat {
            write!(csv, "s{i},").unwrap();
        }
        csv.push_str("weight\n");
        for (path_values, weight) in measure.nodes(&grid) {
            for v in &path_values {
                write!(csv, "{v},").unwrap();
            }
            writeln!(csv, "{weight:.15e}").unwrap();
        }
        fs::write(path, csv)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    let json = serde_json::json!({
        "side": hedge.side,
        "bound": hedge.bound,
        "lambda": hedge.lambda,
        "option_weights": hedge.option_weights,
        "strategy_coeffs": hedge.strategy,
        "gap": hedge.residuals.duality_gap,
        "slack_min": hedge.slack_min,
        "grid": {"points": grid_points, "max": grid_max, "zero_excluded": true},
        "alternative_optima": hedge.alternative_optima,
    });
    write_output(cli, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))?;
    Ok(0)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum SensitivityFamilyConfig {
    Bs {
        sigma: f64,
        base: Vec<f64>,
    },
    HestonWings {
        /// Inclusive moneyness range of the traded strikes whose quotes
        /// anchor the wings.
        traded_range: [f64; 2],
        base: Vec<f64>,
    },
}

#[derive(Debug, Deserialize)]
struct PerturbationEntry {
    label: String,
    parameter: Vec<f64>,
}

fn sensitivity_csv(report: &SensitivityReport) -> String {
    let mut out = String::from("perturbation,derivative,optimal_value,estimated_value,abs_diff\n");
    for row in &report.rows {
        let solved = row
            .solved
            .map_or("invalid".to_string(), |v| format!("{v:.6}"));
        let diff = row
            .abs_diff
            .map_or("invalid".to_string(), |v| format!("{v:.3e}"));
        writeln!(
            out,
            "{},{:.6e},{},{:.6},{}",
            row.label, row.derivative, solved, row.estimate, diff
        )
        .unwrap();
    }
    out
}

fn cmd_sensitivity(cli: &Cli) -> Result<i32, Failure> {
    let Command::Sensitivity {
        side,
        fs_strike,
        grid_points,
        grid_max,
        basis_degree,
        perturbations,
    } = &cli.command
    else {
        unreachable!()
    };
    let quotes = read_quotes(cli)?;
    let config: SensitivityFamilyConfig = serde_json::from_value(read_config_value(cli)?)
        .map_err(|e| Failure::Io(format!("config parse error: {e}")))?;
    let text = fs::read_to_string(perturbations)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", perturbations.display())))?;
    let entries: Vec<PerturbationEntry> =
        serde_json::from_str(&text).map_err(|e| Failure::Io(format!("perturbations: {e}")))?;

    let maturities = quotes.maturities().to_vec();
    let strikes_per_maturity: Vec<Vec<f64>> = (0..maturities.len())
        .map(|i| quotes.quotes_at(i).iter().map(|q| q.moneyness).collect())
        .collect();
    let (family, base) = match config {
        SensitivityFamilyConfig::Bs { sigma, base } => (
            PriceFamily::BsSlopes {
                sigma,
                maturities: maturities.clone(),
                strikes_per_maturity,
            },
            base,
        ),
        SensitivityFamilyConfig::HestonWings { traded_range, base } => {
            let mut quoted = Vec::new();
            for (i, &t) in maturities.iter().enumerate() {
                let mut region = Vec::new();
                for q in quotes.quotes_at(i) {
                    if q.moneyness >= traded_range[0] - 1e-12
                        && q.moneyness <= traded_range[1] + 1e-12
                    {
                        let k = q.log_moneyness();
                        let w = total_variance(k, q.price).map_err(market_failure)?;
                        region.push((k, w));
                    }
                }
                if region.is_empty() {
                    return Err(Failure::Domain(format!(
                        "no traded strikes inside [{}, {}] at maturity {t}",
                        traded_range[0], traded_range[1]
                    )));
                }
                quoted.push(region);
            }
            (
                PriceFamily::HestonWings {
                    maturities: maturities.clone(),
                    quoted,
                    strikes_per_maturity,
                },
                base,
            )
        }
    };

    let grid =
        StateGrid::uniform(*grid_points, *grid_max, &maturities).map_err(hedge_failure)?;
    let basis = StrategyBasis::monomials(*basis_degree, maturities.len() - 1);
    let phi = forward_start_straddle(*fs_strike).map_err(hedge_failure)?;
    let setup = StudySetup {
        payoff: &phi,
        family: &family,
        base_point: &base,
        grid: &grid,
        basis: &basis,
        side: Side::from(*side),
        options: Default::default(),
    };
    let list: Vec<(String, Vec<f64>)> = entries
        .into_iter()
        .map(|e| (e.label, e.parameter))
        .collect();
    let report =
        perturbation_study(&setup, &list).map_err(|e| Failure::Numerical(e.to_string()))?;
    write_output(cli, &sensitivity_csv(&report))?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct ReproRow {
    perturbation: String,
    derivative: f64,
    optimal_value: Option<f64>,
    estimated_value: f64,
    abs_diff: Option<f64>,
    reference_optimal: f64,
    optimal_deviation: Option<f64>,
}

fn reproduce_rows(report: &SensitivityReport, refs: &[reference::PerturbationRow]) -> Vec<ReproRow> {
    report
        .rows
        .iter()
        .zip(refs)
        .map(|(row, r)| ReproRow {
            perturbation: row.label.clone(),
            derivative: row.derivative,
            optimal_value: row.solved,
            estimated_value: row.estimate,
            abs_diff: row.abs_diff,
            reference_optimal: r.optimal_value,
            optimal_deviation: row.solved.map(|v| v - r.optimal_value),
        })
        .collect()
}

fn render_repro_table(
    title: &str,
    overrides: &[String],
    rows: &[ReproRow],
    format: Format,
) -> String {
    match format {
        Format::Json => {
            let json = serde_json::json!({
                "table": title,
                "overrides": overrides,
                "rows": rows,
            });
            format!("{}\n", serde_json::to_string_pretty(&json).unwrap())
        }
        Format::Csv => {
            let mut out = String::new();
            for o in overrides {
                writeln!(out, "# {o}").unwrap();
            }
            out.push_str(
                "perturbation,derivative,optimal_value,estimated_value,abs_diff,reference_optimal,optimal_deviation\n",
            );
            for r in rows {
                writeln!(
                    out,
                    "{},{:.6e},{},{:.6},{},{:.6},{}",
                    r.perturbation,
                    r.derivative,
                    r.optimal_value.map_or("invalid".into(), |v| format!("{v:.6}")),
                    r.estimated_value,
                    r.abs_diff.map_or("invalid".into(), |v| format!("{v:.3e}")),
                    r.reference_optimal,
                    r.optimal_deviation
                        .map_or("invalid".into(), |v| format!("{v:+.2e}")),
                )
                .unwrap();
            }
            out
        }
        Format::Md => {
            let mut out = format!("## {title}\n\n");
            for o in overrides {
                writeln!(out, "- {o}").unwrap();
            }
            out.push_str(
                "\n| Perturbation | Derivative | Optimal Value | Est. Value | Abs. Diff. | Ref. Optimal | Deviation |\n",
            );
            out.push_str("|---|---|---|---|---|---|---|\n");
            for r in rows {
                writeln!(
                    out,
                    "| {} | {:.3e} | {} | {:.4} | {} | {:.4} | {} |",
                    r.perturbation,
                    r.derivative,
                    r.optimal_value.map_or("invalid".into(), |v| format!("{v:.4}")),
                    r.estimated_value,
                    r.abs_diff.map_or("invalid".into(), |v| format!("{v:.2e}")),
                    r.reference_optimal,
                    r.optimal_deviation
                        .map_or("invalid".into(), |v| format!("{v:+.2e}")),
                )
                .unwrap();
            }
            out
        }
    }
}

fn cmd_reproduce(cli: &Cli) -> Result<i32, Failure> {
    let Command::Reproduce {
        table,
        grid_points,
        grid_max,
        basis_degree,
    } = &cli.command
    else {
        unreachable!()
    };
    let mut overrides = Vec::new();
    if let Some(n) = grid_points {
        overrides.push(format!("grid_points = {n} (override, default 500)"));
    }
    if let Some(s) = grid_max {
        overrides.push(format!("grid_max = {s} (override, default 5)"));
    }
    if let Some(d) = basis_degree {
        overrides.push(format!("basis_degree = {d} (override, default 4)"));
    }

    match table {
        1 | 2 => {
            let mut exp = BsExperiment::default();
            if let Some(n) = grid_points {
                exp.grid_points = *n;
            }
            if let Some(s) = grid_max {
                exp.grid_max = *s;
            }
            if let Some(d) = basis_degree {
                exp.basis_degree = *d;
            }
            let side = if *table == 1 { Side::Super } else { Side::Sub };
            let refs: &[reference::PerturbationRow] = if *table == 1 {
                &reference::TABLE_1_SUPER
            } else {
                &reference::TABLE_2_SUB
            };
            let family = exp.family();
            let grid = exp.grid().map_err(|e| Failure::Domain(e.to_string()))?;
            let basis = exp.basis();
            let phi = exp.payoff().map_err(|e| Failure::Domain(e.to_string()))?;
            let setup = StudySetup {
                payoff: &phi,
                family: &family,
                base_point: &[0.0, 0.0],
                grid: &grid,
                basis: &basis,
                side,
                options: Default::default(),
            };
            let perturbations: Vec<(String, Vec<f64>)> = refs
                .iter()
                .map(|r| (format!("{}", r.perturbation), vec![r.perturbation; 2]))
                .collect();
            let report = perturbation_study(&setup, &perturbations)
                .map_err(|e| Failure::Numerical(e.to_string()))?;
            let rows = reproduce_rows(&report, refs);
            let title = if *table == 1 {
                "Table 1: flat-smile super-hedging, ATM forward-start straddle"
            } else {
                "Table 2: flat-smile sub-hedging, ATM forward-start straddle"
            };
            write_output(cli, &render_repro_table(title, &overrides, &rows, cli.format))?;
            Ok(0)
        }
        3 => {
            let exp = HestonExperiment::default();
            let set1 = &reference::TABLE_3_MOMENT_SETS[0];
            let mut rows = Vec::new();
            for (quantity, t, published, computed) in [
                (
                    "q_t1",
                    1.0,
                    set1.q_t1,
                    heston_critical_moment_left(&exp.params, 1.0),
                ),
                (
                    "p_t1",
                    1.0,
                    set1.p_t1,
                    heston_critical_moment_right(&exp.params, 1.0),
                ),
                (
                    "q_t2",
                    1.5,
                    set1.q_t2,
                    heston_critical_moment_left(&exp.params, 1.5),
                ),
                (
                    "p_t2",
                    1.5,
                    set1.p_t2,
                    heston_critical_moment_right(&exp.params, 1.5),
                ),
            ] {
                let computed = computed.map_err(|e| Failure::Numerical(e.to_string()))?;
                let psi = lee_psi(computed).map_err(|e| Failure::Numerical(e.to_string()))?;
                rows.push(serde_json::json!({
                    "quantity": quantity,
                    "maturity": t,
                    "computed": computed,
                    "published": published,
                    "deviation": computed - published,
                    "psi_of_computed": psi,
                }));
            }
            let note = "note: computed critical moments decrease with maturity as moment \
                        explosion requires; the published rows increase, so the published \
                        maturity labels disagree with the defining equation. Values match \
                        the published set with the maturity labels exchanged (the published \
                        left-wing orders additionally correspond to a different mean-reversion \
                        transform).";
            match cli.format {
                Format::Json => {
                    let json = serde_json::json!({
                        "table": "Table 3: critical moment orders (set 1)",
                        "overrides": overrides,
                        "rows": rows,
                        "note": note,
                    });
                    write_output(cli, &format!("{}\n", serde_json::to_string_pretty(&json).unwrap()))?;
                }
                Format::Csv => {
                    let mut out = String::new();
                    writeln!(out, "# {note}").unwrap();
                    out.push_str("quantity,maturity,computed,published,deviation,psi_of_computed\n");
                    for r in &rows {
                        writeln!(
                            out,
                            "{},{},{:.6},{:.6},{:+.4},{:.6}",
                            r["quantity"].as_str().unwrap(),
                            r["maturity"],
                            r["computed"].as_f64().unwrap(),
                            r["published"].as_f64().unwrap(),
                            r["deviation"].as_f64().unwrap(),
                            r["psi_of_computed"].as_f64().unwrap(),
                        )
                        .unwrap();
                    }
                    write_output(cli, &out)?;
                }
                Format::Md => {
                    let mut out = String::from("## Table 3: critical moment orders (set 1)\n\n");
                    for o in &overrides {
                        writeln!(out, "- {o}").unwrap();
                    }
                    out.push_str("\n| Quantity | Maturity | Computed | Published | Deviation | psi(computed) |\n");
                    out.push_str("|---|---|---|---|---|---|\n");
                    for r in &rows {
                        writeln!(
                            out,
                            "| {} | {} | {:.4} | {:.4} | {:+.3} | {:.5} |",
                            r["quantity"].as_str().unwrap(),
                            r["maturity"],
                            r["computed"].as_f64().unwrap(),
                            r["published"].as_f64().unwrap(),
                            r["deviation"].as_f64().unwrap(),
                            r["psi_of_computed"].as_f64().unwrap(),
                        )
                        .unwrap();
                    }
                    writeln!(out, "\n{note}\n").unwrap();
                    write_output(cli, &out)?;
                }
            }
            Ok(0)
        }
        4 | 5 => {
            let mut exp = HestonExperiment::default();
            if let Some(n) = grid_points {
                exp.grid_points = *n;
            }
            if let Some(s) = grid_max {
                exp.grid_max = *s;
            }
            if let Some(d) = basis_degree {
                exp.basis_degree = *d;
            }
            let side = if *table == 4 { Side::Super } else { Side::Sub };
            let refs: &[reference::PerturbationRow] = if *table == 4 {
                &reference::TABLE_4_SUPER
            } else {
                &reference::TABLE_5_SUB
            };
            let quad = HestonQuadratureConfig::default();
            let family = exp
                .family(&quad)
                .map_err(|e| Failure::Numerical(e.to_string()))?;
            let grid = exp.grid().map_err(|e| Failure::Domain(e.to_string()))?;
            let basis = exp.basis();
            let phi = exp.payoff().map_err(|e| Failure::Domain(e.to_string()))?;
            let base = reference::TABLE_3_MOMENT_SETS[0].parameter();
            let setup = StudySetup {
                payoff: &phi,
                family: &family,
                base_point: &base,
                grid: &grid,
                basis: &basis,
                side,
                options: Default::default(),
            };
            let perturbations: Vec<(String, Vec<f64>)> = reference::TABLE_3_MOMENT_SETS
                .iter()
                .map(|s| (format!("set {}", s.set), s.parameter()))
                .collect();
            let report = perturbation_study(&setup, &perturbations)
                .map_err(|e| Failure::Numerical(e.to_string()))?;
            let rows = reproduce_rows(&report, refs);
            let title = if *table == 4 {
                "Table 4: Heston super-hedging, ATM forward-start straddle"
            } else {
                "Table 5: Heston sub-hedging, ATM forward-start straddle"
            };
            write_output(cli, &render_repro_table(title, &overrides, &rows, cli.format))?;
            Ok(0)
        }
        other => Err(Failure::Io(format!("unknown table {other}, expected 1-5"))),
    }
}

fn cmd_figure_region(cli: &Cli) -> Result<i32, Failure> {
    let Command::FigureRegion { maturity, demo } = &cli.command else {
        unreachable!()
    };
    let quotes = if *demo {
        load_quotes(SYNTHETIC_DEMO_QUOTES.as_bytes()).map_err(market_failure)?
    } else {
        read_quotes(cli)?
    };
    let idx = match maturity {
        Some(t) => quotes
            .maturities()
            .iter()
            .position(|&m| (m - t).abs() <= 1e-12)
            .ok_or_else(|| Failure::Domain(format!("maturity {t} not in input")))?,
        None => 0,
    };
    let group = quotes.quotes_at(idx);
    let region =
        feasible_extrapolation_region(group).map_err(|e| Failure::Domain(e.to_string()))?;
    let mut out = String::from("kind,label,strike1,price1,strike2,price2\n");
    // Quoted chords forming the interpolation envelope.
    for pair in group.windows(2) {
        writeln!(
            out,
            "segment,chord,{},{},{},{}",
            pair[0].moneyness, pair[0].price, pair[1].moneyness, pair[1].price
        )
        .unwrap();
    }
    // Extrapolation envelope out to the square/circle terminals.
    let square_price = (1.0 - region.k_square).max(0.0);
    writeln!(
        out,
        "segment,left-extrapolation,{},{},{},{}",
        region.k_square, square_price, group[0].moneyness, group[0].price
    )
    .unwrap();
    writeln!(
        out,
        "segment,right-extrapolation,{},{},{},0",
        group[group.len() - 1].moneyness,
        group[group.len() - 1].price,
        region.k_circle
    )
    .unwrap();
    writeln!(out, "marker,square,{},{},,", region.k_square, square_price).unwrap();
    writeln!(out, "marker,circle,{},0,,", region.k_circle).unwrap();
    write_output(cli, &out)?;
    Ok(0)
}
