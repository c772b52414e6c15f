//! Subcommand definitions and dispatch.
//!
//! Every command renders its complete output in memory before anything is
//! written, so a failing run leaves stdout and `--out` untouched.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::config::{load_config, SimulationConfig};
use super::ingest::{ingest_survey, survey_spreads};
use super::report::{build_report, fmt_num, report_tables, tables_to_text, to_stable_json, CompositionRow, CsvTable};
use super::CliError;
use crate::crisis::{batch_compare, run_scenario, SimConfig};
use crate::portfolio::{
    cal_slope, classify_tangency_regime, frontier_points, gmv_portfolio, tangency_portfolio, FrontierModel,
    PortfolioPoint, TangencyKind, DEFAULT_REGIME_TOL,
};
use crate::pricing::{
    bs_price, bs_rho, capm_expected_return, capm_rate_sensitivity, CapmInput, ModelShift, OptionKind, OptionSpec,
};
use crate::rate_model::{compose, estimates_from_rates, normalize_weights, regime_preset, CategoryMap, Regime};

#[derive(Debug, Parser)]
#[command(name = "rfr-kit", version, about = "Composite risk-free rate toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Run config whose `[frontier]` table defines the model.
    #[arg(long, conflicts_with_all = ["mu", "sigma"])]
    pub config: Option<PathBuf>,
    /// Expected returns, comma separated.
    #[arg(long, requires = "sigma", allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Covariance rows separated by `;`, entries by `,`.
    #[arg(long, requires = "mu", allow_hyphen_values = true)]
    pub sigma: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compose r0 from six source rates.
    Compose {
        /// Six raw weights (normalized before use).
        #[arg(long, conflicts_with_all = ["regime", "category_map"], allow_hyphen_values = true)]
        weights: Option<String>,
        #[arg(long)]
        regime: Option<Regime>,
        /// Level values high,average,low,minimum.
        #[arg(long, requires = "regime")]
        category_map: Option<String>,
        /// Six source rates as decimals, in source order.
        #[arg(long, allow_hyphen_values = true)]
        rates: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Estimate the six source rates described by a config.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// CAPM expected return and its rate sensitivity.
    Capm {
        #[arg(long, allow_hyphen_values = true)]
        r0: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, allow_hyphen_values = true)]
        market_return: f64,
        /// Also report the change when r0 moves to this value.
        #[arg(long, allow_hyphen_values = true)]
        r0_new: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Black-Scholes price and rho.
    Bs {
        #[arg(long)]
        spot: f64,
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        vol: f64,
        #[arg(long, allow_hyphen_values = true)]
        rate: f64,
        /// Years to expiry.
        #[arg(long)]
        expiry: f64,
        #[arg(long, default_value_t = OptionKind::Call)]
        kind: OptionKind,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Efficient-frontier points as (stdev, return) pairs.
    Frontier {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 21)]
        points: usize,
        /// Target return range lo,hi; defaults to the span of the expected returns.
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Classify r0 against the GMV return as Efficient, Degenerate or Inverted.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        r0: f64,
        #[arg(long, default_value_t = DEFAULT_REGIME_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the dual-listing crisis simulator.
    Simulate {
        /// Simulator parameters, either a bare table or a run config's `[simulation]`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        regime: Option<Regime>,
        /// Compare both regimes over this many paired seeds.
        #[arg(long)]
        batch: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Per-country spread of a survey file.
    Survey {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Full report for a run config.
    Report {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the simulator seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file for JSON, directory for CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
    },
}

/// Fully rendered command output.
#[derive(Debug, Clone, PartialEq)]
pub enum Rendered {
    Document(String),
    Tables(Vec<CsvTable>),
}

pub struct Outcome {
    pub rendered: Rendered,
    pub out: Option<PathBuf>,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| input(format!("{what}: `{s}` is not a finite number")))
        })
        .collect()
}

fn parse_six(text: &str, what: &str) -> Result<[f64; 6], CliError> {
    let v = parse_list(text, what)?;
    v.as_slice()
        .try_into()
        .map_err(|_| input(format!("{what}: expected 6 values, got {}", v.len())))
}

pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>, CliError> {
    text.split(';').map(|row| parse_list(row, "sigma")).collect()
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), CliError> {
    match parse_list(text, what)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        v => Err(input(format!("{what}: expected 2 values, got {}", v.len()))),
    }
}

fn load_model(args: &ModelArgs) -> Result<(FrontierModel, Option<(f64, f64)>), CliError> {
    match (&args.config, &args.mu, &args.sigma) {
        (Some(path), _, _) => {
            let loaded = load_config(path)?;
            let range = loaded.config.frontier.as_ref().map(|f| f.range());
            let model = loaded
                .frontier
                .ok_or_else(|| input(format!("{} has no [frontier] table", path.display())))?;
            Ok((model, range))
        }
        (None, Some(mu), Some(sigma)) => {
            Ok((FrontierModel::new(parse_list(mu, "mu")?, parse_matrix(sigma)?)?, None))
        }
        _ => Err(input("give either --config or both --mu and --sigma")),
    }
}

fn load_sim_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| input(format!("config: {}", e.message())))?;
    let config = match table.get("simulation") {
        Some(sim) => {
            let sim: SimulationConfig = sim
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| input(format!("simulation: {}", e.message())))?;
            sim.params
        }
        None => toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| input(format!("config: {}", e.message())))?,
    };
    Ok(config)
}

fn json<T: Serialize>(value: &T) -> Result<Rendered, CliError> {
    Ok(Rendered::Document(to_stable_json(value)?))
}

fn render(
    format: Format,
    value: &impl Serialize,
    text: impl FnOnce() -> String,
    tables: impl FnOnce() -> Vec<CsvTable>,
) -> Result<Rendered, CliError> {
    match format {
        Format::Text => Ok(Rendered::Document(text())),
        Format::Json => json(value),
        Format::Csv => Ok(Rendered::Tables(tables())),
    }
}

#[derive(Serialize)]
struct CapmOutput {
    r0: f64,
    beta: f64,
    market_return: f64,
    expected_return: f64,
    rate_sensitivity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift: Option<ModelShift>,
}

#[derive(Serialize)]
struct BsOutput {
    option: OptionSpec,
    price: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
}

#[derive(Serialize)]
struct FrontierOutput {
    a: f64,
    b: f64,
    c: f64,
    gmv: PortfolioPoint,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct ClassifyOutput {
    r0: f64,
    regime: TangencyKind,
    gmv_return: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tangency: Option<PortfolioPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cal_slope: Option<f64>,
}

#[derive(Serialize)]
struct ScenarioOutput {
    regime: Regime,
    seed: u64,
    r0: f64,
    mean_arb_return: f64,
    no_opportunities: bool,
    n_opportunities: usize,
    composition: CompositionRow,
    venue_a: Vec<f64>,
    venue_b: Vec<f64>,
}

/// Executes a parsed command, returning its output without writing it.
pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    let (rendered, out) = match cli.command {
        Command::Compose {
            weights,
            regime,
            category_map,
            rates,
            output,
        } => {
            let rates = estimates_from_rates(parse_six(&rates, "rates")?, "command line")?;
            let (w, label) = match (weights, regime) {
                (Some(w), _) => (normalize_weights(parse_six(&w, "weights")?)?, "custom".to_string()),
                (None, Some(regime)) => {
                    let map = match category_map {
                        Some(text) => {
                            let v = parse_list(&text, "category-map")?;
                            let [high, average, low, minimum]: [f64; 4] = v
                                .as_slice()
                                .try_into()
                                .map_err(|_| input("category-map: expected high,average,low,minimum"))?;
                            CategoryMap {
                                high,
                                average,
                                low,
                                minimum,
                            }
                        }
                        None => CategoryMap::default(),
                    };
                    (regime_preset(regime, &map)?, regime.to_string())
                }
                (None, None) => return Err(input("compose needs --weights or --regime")),
            };
            let row = CompositionRow::new(&label, &compose(&w, &rates)?);
            let rendered = render(
                output.format,
                &row,
                || {
                    let mut s = format!("r0 = {}\n", fmt_num(row.r0));
                    for b in &row.breakdown {
                        let _ = writeln!(
                            s,
                            "  {:<18} weight {:<16} rate {:<16} contribution {}",
                            b.source.as_str(),
                            fmt_num(b.weight),
                            fmt_num(b.rate),
                            fmt_num(b.contribution)
                        );
                    }
                    s
                },
                || {
                    vec![CsvTable {
                        name: "composition",
                        header: vec!["source", "weight", "rate", "contribution"],
                        rows: row
                            .breakdown
                            .iter()
                            .map(|b| {
                                vec![b.source.to_string(), fmt_num(b.weight), fmt_num(b.rate), fmt_num(b.contribution)]
                            })
                            .collect(),
                    }]
                },
            )?;
            (rendered, output.out)
        }
        Command::Estimate { config, output } => {
            let sources = load_config(&config)?.sources;
            let rendered = render(
                output.format,
                &sources,
                || {
                    let mut s = String::new();
                    for e in &sources.estimates {
                        let _ = writeln!(s, "{:<18} {:<16} {}", e.kind.as_str(), fmt_num(e.rate), e.provenance);
                    }
                    for w in &sources.warnings {
                        let _ = writeln!(s, "warning: {w}");
                    }
                    s
                },
                || {
                    vec![CsvTable {
                        name: "sources",
                        header: vec!["source", "rate", "provenance"],
                        rows: sources
                            .estimates
                            .iter()
                            .map(|e| vec![e.kind.to_string(), fmt_num(e.rate), e.provenance.clone()])
                            .collect(),
                    }]
                },
            )?;
            (rendered, output.out)
        }
        Command::Capm {
            r0,
            beta,
            market_return,
            r0_new,
            output,
        } => {
            let capm = CapmInput {
                r0,
                beta,
                market_return,
            };
            let expected = capm_expected_return(&capm)?;
            let shift = r0_new
                .map(|r| capm_expected_return(&CapmInput { r0: r, ..capm }).map(|after| ModelShift::new(expected, after)))
                .transpose()?;
            let out = CapmOutput {
                r0,
                beta,
                market_return,
                expected_return: expected,
                rate_sensitivity: capm_rate_sensitivity(beta),
                shift,
            };
            let rendered = render(
                output.format,
                &out,
                || {
                    let mut s = format!(
                        "expected_return = {}\nrate_sensitivity = {}\n",
                        fmt_num(out.expected_return),
                        fmt_num(out.rate_sensitivity)
                    );
                    if let Some(m) = &out.shift {
                        let _ = writeln!(s, "shifted_return = {}\ndelta = {} ({:?})", fmt_num(m.after), fmt_num(m.delta), m.direction);
                    }
                    s
                },
                || {
                    vec![CsvTable {
                        name: "capm",
                        header: vec!["r0", "beta", "market_return", "expected_return", "rate_sensitivity"],
                        rows: vec![vec![
                            fmt_num(r0),
                            fmt_num(beta),
                            fmt_num(market_return),
                            fmt_num(out.expected_return),
                            fmt_num(out.rate_sensitivity),
                        ]],
                    }]
                },
            )?;
            (rendered, output.out)
        }
        Command::Bs {
            spot,
            strike,
            vol,
            rate,
            expiry,
            kind,
            output,
        } => {
            let option = OptionSpec {
                spot,
                strike,
                volatility: vol,
                rate,
                time_to_expiry: expiry,
                kind,
            };
            let out = BsOutput {
                option,
                price: bs_price(&option)?,
                rho: bs_rho(&option).ok(),
            };
            let rho_text = out.rho.map(fmt_num).unwrap_or_default();
            let rendered = render(
                output.format,
                &out,
                || {
                    let mut s = format!("price = {}\n", fmt_num(out.price));
                    if out.rho.is_some() {
                        let _ = writeln!(s, "rho = {rho_text}");
                    }
                    s
                },
                || {
                    vec![CsvTable {
                        name: "option",
                        header: vec!["kind", "price", "rho"],
                        rows: vec![vec![kind.to_string(), fmt_num(out.price), rho_text.clone()]],
                    }]
                },
            )?;
            (rendered, output.out)
        }
        Command::Frontier {
            model,
            points,
            range,
            output,
        } => {
            let (model, config_range) = load_model(&model)?;
            let range = match range {
                Some(text) => parse_pair(&text, "range")?,
                None => config_range.unwrap_or_else(|| {
                    let mu = model.mu();
                    (mu.min(), mu.max())
                }),
            };
            let pts: Vec<[f64; 2]> = frontier_points(&model, points, range)?
                .iter()
                .map(|p| [p.stdev, p.expected_return])
                .collect();
            let out = FrontierOutput {
                a: model.a(),
                b: model.b(),
                c: model.c(),
                gmv: gmv_portfolio(&model),
                points: pts,
            };
            let rows = || out.points.iter().map(|p| vec![fmt_num(p[0]), fmt_num(p[1])]).collect::<Vec<_>>();
            let rendered = render(
                output.format,
                &out,
                || {
                    let mut s = String::from("stdev,expected_return\n");
                    for r in rows() {
                        let _ = writeln!(s, "{}", r.join(","));
                    }
                    s
                },
                || {
                    vec![CsvTable {
                        name: "frontier",
                        header: vec!["stdev", "expected_return"],
                        rows: rows(),
                    }]
                },
            )?;
            (rendered, output.out)
        }
        Command::Classify { model, r0, tol, output } => {
            if !r0.is_finite() || !(tol.is_finite() && tol >= 0.0) {
                return Err(input("--r0 and --tol must be finite, --tol >= 0"));
            }
            let (model, _) = load_model(&model)?;
            let regime = classify_tangency_regime(&model, r0, tol);
            let (tangency, slope) = match regime.kind {
                TangencyKind::Degenerate => (None, None),
                _ => (tangency_portfolio(&model, r0).ok(), cal_slope(&model, r0).ok()),
            };
            let out = ClassifyOutput {
                r0,
                regime: regime.kind,
                gmv_return: regime.gmv_return,
                tangency,
                cal_slope: slope,
            };
            let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
            let rendered = render(
                output.format,
                &out,
                || {
                    let mut s = format!("{}\nr0 = {}\ngmv_return = {}\n", out.regime, fmt_num(r0), fmt_num(out.gmv_return));
                    if let Some(t) = &out.tangency {
                        let _ = writeln!(s, "tangency_return = {}\ntangency_stdev = {}", fmt_num(t.expected_return), fmt_num(t.stdev));
                    }
                    if let Some(k) = out.cal_slope {
                        let _ = writeln!(s, "cal_slope = {}", fmt_num(k));
                    }
                    s
                },
                || {
                    vec![CsvTable {
                        name: "classify",
                        header: vec!["r0", "regime", "gmv_return", "tangency_return", "cal_slope"],
                        rows: vec![vec![
                            fmt_num(r0),
                            out.regime.to_string(),
                            fmt_num(out.gmv_return),
                            opt(out.tangency.as_ref().map(|t| t.expected_return)),
                            opt(out.cal_slope),
                        ]],
                    }]
                },
            )?;
            (rendered, output.out)
        }
        Command::Simulate {
            config,
            seed,
            regime,
            batch,
            output,
        } => {
            let mut params = match &config {
                Some(path) => load_sim_config(path)?,
                None => SimConfig::default(),
            };
            if let Some(seed) = seed {
                params.seed = seed;
            }
            if let Some(regime) = regime {
                params.regime = regime;
            }
            params.validate()?;
            let rendered = match batch {
                Some(n) => {
                    if n < 2 {
                        return Err(input("--batch must be >= 2"));
                    }
                    let summary = batch_compare(&params, n)?;
                    render(
                        output.format,
                        &summary,
                        || {
                            let mut s = format!("seeds {}..{}\n", summary.first_seed, summary.first_seed + n as u64);
                            for (label, st) in [("normal", &summary.normal), ("crisis", &summary.crisis)] {
                                let _ = writeln!(
                                    s,
                                    "{label:<7} mean_r0 = {} min_r0 = {} max_r0 = {} mean_arb_return = {}",
                                    fmt_num(st.mean_r0),
                                    fmt_num(st.min_r0),
                                    fmt_num(st.max_r0),
                                    fmt_num(st.mean_arb_return)
                                );
                            }
                            let _ = writeln!(
                                s,
                                "mean_paired_difference = {}\ncrisis_greater_fraction = {}",
                                fmt_num(summary.mean_paired_difference),
                                fmt_num(summary.crisis_greater_fraction)
                            );
                            s
                        },
                        || {
                            vec![CsvTable {
                                name: "paired_differences",
                                header: vec!["seed", "difference"],
                                rows: summary
                                    .paired_differences
                                    .iter()
                                    .enumerate()
                                    .map(|(i, d)| vec![(summary.first_seed + i as u64).to_string(), fmt_num(*d)])
                                    .collect(),
                            }]
                        },
                    )?
                }
                None => {
                    let result = run_scenario(&params)?;
                    let out = ScenarioOutput {
                        regime: result.regime,
                        seed: result.seed,
                        r0: result.composition.r0,
                        mean_arb_return: result.mean_arb_return,
                        no_opportunities: result.no_opportunities,
                        n_opportunities: result.opportunities.len(),
                        composition: CompositionRow::new(result.regime.as_str(), &result.composition),
                        venue_a: result.paths.venue_a.clone(),
                        venue_b: result.paths.venue_b.clone(),
                    };
                    render(
                        output.format,
                        &out,
                        || {
                            format!(
                                "regime = {}\nseed = {}\nr0 = {}\narbitrage_rate = {}\nopportunities = {}\n",
                                out.regime,
                                out.seed,
                                fmt_num(out.r0),
                                fmt_num(out.mean_arb_return),
                                out.n_opportunities
                            )
                        },
                        || {
                            vec![CsvTable {
                                name: "paths",
                                header: vec!["step", "venue_a", "venue_b"],
                                rows: out
                                    .venue_a
                                    .iter()
                                    .zip(&out.venue_b)
                                    .enumerate()
                                    .map(|(i, (a, b))| vec![i.to_string(), fmt_num(*a), fmt_num(*b)])
                                    .collect(),
                            }]
                        },
                    )?
                }
            };
            (rendered, output.out)
        }
        Command::Survey { input: path, output } => {
            let spreads = survey_spreads(&ingest_survey(&path)?);
            let rows = || {
                spreads
                    .iter()
                    .map(|(c, s)| vec![c.clone(), fmt_num(s.min), fmt_num(s.max), fmt_num(s.spread)])
                    .collect::<Vec<_>>()
            };
            let rendered = render(
                output.format,
                &spreads,
                || {
                    let mut s = String::new();
                    for r in rows() {
                        let _ = writeln!(s, "{:<16} min {:<14} max {:<14} spread {}", r[0], r[1], r[2], r[3]);
                    }
                    s
                },
                || {
                    vec![CsvTable {
                        name: "survey",
                        header: vec!["country", "min", "max", "spread"],
                        rows: rows(),
                    }]
                },
            )?;
            (rendered, output.out)
        }
        Command::Report {
            config,
            seed,
            out,
            format,
        } => {
            let report = build_report(&load_config(&config)?, seed)?;
            let rendered = match format {
                ReportFormat::Json => json(&report)?,
                ReportFormat::Csv => Rendered::Tables(report_tables(&report)),
            };
            (rendered, out)
        }
    };
    Ok(Outcome { rendered, out })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

/// Writes an outcome to stdout, a file, or (for tables) a directory of CSV files.
pub fn emit(outcome: &Outcome, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    match (&outcome.rendered, &outcome.out) {
        (Rendered::Document(text), None) => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
        (Rendered::Document(text), Some(path)) => write_file(path, text),
        (Rendered::Tables(tables), None) => stdout
            .write_all(tables_to_text(tables)?.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
        (Rendered::Tables(tables), Some(dir)) => {
            let rendered = tables
                .iter()
                .map(|t| Ok((dir.join(format!("{}.csv", t.name)), t.render()?)))
                .collect::<Result<Vec<_>, CliError>>()?;
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))?;
            rendered.iter().try_for_each(|(path, text)| write_file(path, text))
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { super::EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = execute(cli).and_then(|outcome| emit(&outcome, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
