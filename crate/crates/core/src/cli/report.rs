//! Full-run report assembly and its JSON / CSV renderings.
//!
//! JSON keys are emitted in sorted order and every floating-point number is
//! rounded to 12 significant digits, so a report is byte-stable for a given
//! config and seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{LoadedConfig, RunConfig};
use super::CliError;
use crate::crisis::{batch_compare, BatchSummary};
use crate::portfolio::{
    cal_slope, classify_tangency_regime, frontier_points, gmv_portfolio, tangency_portfolio, PortfolioPoint,
    TangencyKind,
};
use crate::pricing::{bs_price, bs_rho, capm_expected_return, capm_rate_sensitivity, rate_shift_report, CapmInput, RateShiftReport};
use crate::rate_model::{compose, regime_preset, RateComposition, Regime, SourceEstimate, SourceKind, SurveySpread};

pub const SCHEMA_VERSION: u32 = 1;
pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn tool_version() -> String {
    format!("rfr-kit {}", env!("CARGO_PKG_VERSION"))
}

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal text of the rounded value.
pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        // Normalizes -0.
        return "0".into();
    }
    if (1e-5..1e16).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn round_value(v: &mut Value) -> Result<(), CliError> {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r = round_sig(x);
            *v = serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r })
                .map(Value::Number)
                .ok_or_else(|| CliError::Numerical(format!("non-finite value {x} in output")))?;
        }
        Value::Array(items) => items.iter_mut().try_for_each(round_value)?,
        Value::Object(map) => map.values_mut().try_for_each(round_value)?,
        _ => {}
    }
    Ok(())
}

/// Serializes with sorted keys and 12-significant-digit numbers.
pub fn to_stable_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    // serde_json maps non-finite floats to null; reject them here instead.
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    if contains_null_number(&v) {
        return Err(CliError::Numerical("non-finite value in output".into()));
    }
    round_value(&mut v)?;
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

fn contains_null_number(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Array(items) => items.iter().any(contains_null_number),
        Value::Object(map) => map.values().any(contains_null_number),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: RunConfig,
    pub sources: Vec<SourceEstimate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub source_warnings: Vec<String>,
    pub compositions: Vec<CompositionRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub capm: Vec<CapmRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<OptionRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rate_shifts: Vec<ShiftRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frontier: Option<FrontierSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<BatchSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey: Option<BTreeMap<String, SurveySpread>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionRow {
    /// `normal`, `crisis` or `custom`.
    pub label: String,
    pub r0: f64,
    pub breakdown: Vec<BreakdownRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub source: SourceKind,
    pub weight: f64,
    pub rate: f64,
    pub contribution: f64,
}

impl CompositionRow {
    pub fn new(label: &str, c: &RateComposition) -> Self {
        let contributions = c.contributions();
        Self {
            label: label.to_string(),
            r0: c.r0,
            breakdown: SourceKind::ALL
                .iter()
                .map(|&k| BreakdownRow {
                    source: k,
                    weight: c.weights.get(k),
                    rate: c.rate(k),
                    contribution: contributions[k.index()],
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapmRow {
    pub asset: String,
    pub beta: f64,
    pub composition: String,
    pub r0: f64,
    pub expected_return: f64,
    pub rate_sensitivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionRow {
    pub option: String,
    pub composition: String,
    pub r0: f64,
    pub price: f64,
    /// Absent at zero expiry or zero volatility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub option: String,
    pub asset: String,
    pub from: String,
    pub to: String,
    pub shift: RateShiftReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSection {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub gmv: PortfolioPoint,
    /// `(stdev, expected_return)` pairs in ascending return order.
    pub points: Vec<[f64; 2]>,
    pub tangency: Vec<TangencyRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyRow {
    /// Composition label, or `grid` for configured extra rates.
    pub label: String,
    pub r0: f64,
    pub regime: TangencyKind,
    pub gmv_return: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portfolio: Option<PortfolioPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cal_slope: Option<f64>,
}

/// Runs every configured analysis. `seed` overrides the simulator seed.
pub fn build_report(loaded: &LoadedConfig, seed: Option<u64>) -> Result<Report, CliError> {
    let mut config = loaded.config.clone();
    if let (Some(seed), Some(sim)) = (seed, config.simulation.as_mut()) {
        sim.params.seed = seed;
    }
    let estimates = &loaded.sources.estimates;

    let mut compositions: Vec<(String, RateComposition)> = Vec::new();
    for regime in Regime::ALL {
        let w = regime_preset(regime, &config.weights.category_map)?;
        compositions.push((regime.as_str().into(), compose(&w, estimates)?.with_regime(regime)));
    }
    if let Some(w) = &loaded.explicit_weights {
        compositions.push(("custom".into(), compose(w, estimates)?));
    }

    let mut capm = Vec::new();
    if let Some(c) = &config.capm {
        for asset in &c.assets {
            for (label, comp) in &compositions {
                let input = CapmInput {
                    r0: comp.r0,
                    beta: asset.beta,
                    market_return: c.market_return,
                };
                capm.push(CapmRow {
                    asset: asset.id.clone(),
                    beta: asset.beta,
                    composition: label.clone(),
                    r0: comp.r0,
                    expected_return: capm_expected_return(&input)?,
                    rate_sensitivity: capm_rate_sensitivity(asset.beta),
                });
            }
        }
    }

    let mut options = Vec::new();
    for opt in &config.options {
        for (label, comp) in &compositions {
            let spec = opt.spec(comp.r0);
            options.push(OptionRow {
                option: opt.id.clone(),
                composition: label.clone(),
                r0: comp.r0,
                price: bs_price(&spec)?,
                rho: bs_rho(&spec).ok(),
            });
        }
    }

    let (normal_r0, crisis_r0) = (compositions[0].1.r0, compositions[1].1.r0);
    let mut rate_shifts = Vec::new();
    if let Some(c) = &config.capm {
        for opt in &config.options {
            for asset in &c.assets {
                let input = CapmInput {
                    r0: normal_r0,
                    beta: asset.beta,
                    market_return: c.market_return,
                };
                rate_shifts.push(ShiftRow {
                    option: opt.id.clone(),
                    asset: asset.id.clone(),
                    from: Regime::Normal.as_str().into(),
                    to: Regime::Crisis.as_str().into(),
                    shift: rate_shift_report(&opt.spec(normal_r0), &input, normal_r0, crisis_r0)?,
                });
            }
        }
    }

    let frontier = match (&config.frontier, &loaded.frontier) {
        (Some(fc), Some(model)) => {
            let points = frontier_points(model, fc.n_points, fc.range())?
                .iter()
                .map(|p| [p.stdev, p.expected_return])
                .collect();
            let rates = compositions
                .iter()
                .map(|(l, c)| (l.clone(), c.r0))
                .chain(fc.r0_grid.iter().map(|&r| ("grid".to_string(), r)));
            let tangency = rates
                .map(|(label, r0)| {
                    let regime = classify_tangency_regime(model, r0, fc.tol);
                    let (portfolio, slope) = match regime.kind {
                        TangencyKind::Degenerate => (None, None),
                        _ => (tangency_portfolio(model, r0).ok(), cal_slope(model, r0).ok()),
                    };
                    TangencyRow {
                        label,
                        r0,
                        regime: regime.kind,
                        gmv_return: regime.gmv_return,
                        portfolio,
                        cal_slope: slope,
                    }
                })
                .collect();
            Some(FrontierSection {
                a: model.a(),
                b: model.b(),
                c: model.c(),
                gmv: gmv_portfolio(model),
                points,
                tangency,
            })
        }
        _ => None,
    };

    let simulation = match &config.simulation {
        Some(sim) => Some(batch_compare(&sim.params, sim.n_seeds)?),
        None => None,
    };

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool_version: tool_version(),
        seed: config.simulation.as_ref().map(|s| s.params.seed),
        sources: estimates.clone(),
        source_warnings: loaded.sources.warnings.clone(),
        compositions: compositions.iter().map(|(l, c)| CompositionRow::new(l, c)).collect(),
        capm,
        options,
        rate_shifts,
        frontier,
        simulation,
        survey: loaded.survey.as_ref().map(super::ingest::survey_spreads),
        config,
    })
}

/// One CSV table of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn render(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Output(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Splits a report into spreadsheet tables; empty sections produce no table.
pub fn report_tables(report: &Report) -> Vec<CsvTable> {
    let mut tables = vec![
        CsvTable {
            name: "sources",
            header: vec!["source", "rate", "provenance"],
            rows: report
                .sources
                .iter()
                .map(|s| vec![s.kind.to_string(), fmt_num(s.rate), s.provenance.clone()])
                .collect(),
        },
        CsvTable {
            name: "compositions",
            header: vec!["composition", "source", "weight", "rate", "contribution", "r0"],
            rows: report
                .compositions
                .iter()
                .flat_map(|c| {
                    c.breakdown.iter().map(|b| {
                        vec![
                            c.label.clone(),
                            b.source.to_string(),
                            fmt_num(b.weight),
                            fmt_num(b.rate),
                            fmt_num(b.contribution),
                            fmt_num(c.r0),
                        ]
                    })
                })
                .collect(),
        },
    ];
    if !report.capm.is_empty() {
        tables.push(CsvTable {
            name: "capm",
            header: vec!["asset", "beta", "composition", "r0", "expected_return", "rate_sensitivity"],
            rows: report
                .capm
                .iter()
                .map(|r| {
                    vec![
                        r.asset.clone(),
                        fmt_num(r.beta),
                        r.composition.clone(),
                        fmt_num(r.r0),
                        fmt_num(r.expected_return),
                        fmt_num(r.rate_sensitivity),
                    ]
                })
                .collect(),
        });
    }
    if !report.options.is_empty() {
        tables.push(CsvTable {
            name: "options",
            header: vec!["option", "composition", "r0", "price", "rho"],
            rows: report
                .options
                .iter()
                .map(|r| vec![r.option.clone(), r.composition.clone(), fmt_num(r.r0), fmt_num(r.price), opt_num(r.rho)])
                .collect(),
        });
    }
    if !report.rate_shifts.is_empty() {
        tables.push(CsvTable {
            name: "rate_shifts",
            header: vec![
                "option", "asset", "from", "to", "r0_old", "r0_new", "capm_delta", "option_delta",
            ],
            rows: report
                .rate_shifts
                .iter()
                .map(|r| {
                    vec![
                        r.option.clone(),
                        r.asset.clone(),
                        r.from.clone(),
                        r.to.clone(),
                        fmt_num(r.shift.r0_old),
                        fmt_num(r.shift.r0_new),
                        fmt_num(r.shift.capm.delta),
                        fmt_num(r.shift.option.delta),
                    ]
                })
                .collect(),
        });
    }
    if let Some(f) = &report.frontier {
        tables.push(CsvTable {
            name: "frontier",
            header: vec!["stdev", "expected_return"],
            rows: f.points.iter().map(|p| vec![fmt_num(p[0]), fmt_num(p[1])]).collect(),
        });
        tables.push(CsvTable {
            name: "tangency",
            header: vec!["label", "r0", "regime", "gmv_return", "tangency_return", "tangency_stdev", "cal_slope"],
            rows: f
                .tangency
                .iter()
                .map(|t| {
                    vec![
                        t.label.clone(),
                        fmt_num(t.r0),
                        t.regime.to_string(),
                        fmt_num(t.gmv_return),
                        opt_num(t.portfolio.as_ref().map(|p| p.expected_return)),
                        opt_num(t.portfolio.as_ref().map(|p| p.stdev)),
                        opt_num(t.cal_slope),
                    ]
                })
                .collect(),
        });
    }
    if let Some(s) = &report.simulation {
        tables.push(CsvTable {
            name: "simulation",
            header: vec!["regime", "mean_r0", "min_r0", "max_r0", "mean_arb_return", "mean_opportunities"],
            rows: [("normal", &s.normal), ("crisis", &s.crisis)]
                .iter()
                .map(|(l, st)| {
                    vec![
                        l.to_string(),
                        fmt_num(st.mean_r0),
                        fmt_num(st.min_r0),
                        fmt_num(st.max_r0),
                        fmt_num(st.mean_arb_return),
                        fmt_num(st.mean_opportunities),
                    ]
                })
                .collect(),
        });
    }
    if let Some(s) = &report.survey {
        tables.push(CsvTable {
            name: "survey",
            header: vec!["country", "min", "max", "spread"],
            rows: s
                .iter()
                .map(|(c, sp)| vec![c.clone(), fmt_num(sp.min), fmt_num(sp.max), fmt_num(sp.spread)])
                .collect(),
        });
    }
    tables
}

/// All tables concatenated, each preceded by a `# name` line.
pub fn tables_to_text(tables: &[CsvTable]) -> Result<String, CliError> {
    let mut out = String::new();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "# {}", t.name);
        out.push_str(&t.render()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rounding_examples() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(-123456.7890123456), -123456.789012);
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(0.05), "0.05");
        assert_eq!(fmt_num(2.0e-20 / 3.0), "6.66666666667e-21");
    }

    #[test]
    fn non_finite_output_rejected() {
        assert!(to_stable_json(&vec![1.0, f64::NAN]).is_err());
        assert!(to_stable_json(&vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn keys_are_sorted() {
        #[derive(Serialize)]
        struct S {
            zeta: u8,
            alpha: u8,
        }
        let text = to_stable_json(&S { zeta: 1, alpha: 2 }).unwrap();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
    }

    proptest! {
        #[test]
        fn emitted_numbers_reparse_exactly(xs in prop::collection::vec(-1e12..1e12f64, 1..20), scale in -30i32..30) {
            let ys: Vec<f64> = xs.iter().map(|x| x * 10f64.powi(scale)).collect();
            let text = to_stable_json(&ys).unwrap();
            let back: Vec<f64> = serde_json::from_str(&text).unwrap();
            for (y, b) in ys.iter().zip(&back) {
                let want = round_sig(*y);
                prop_assert_eq!(if want == 0.0 { 0.0 } else { want }, *b);
                prop_assert_eq!(round_sig(*b), *b);
            }
        }
    }
}
