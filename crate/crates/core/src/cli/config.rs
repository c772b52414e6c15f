//! Run configuration: a single TOML file describing source inputs, weights,
//! pricing grids, the frontier model and the simulator.
//!
//! Relative file paths inside the config resolve against the config file's
//! directory. Loading reads and validates everything up front, so a config
//! that loads cleanly cannot fail for input reasons later.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ingest::{align_venues, ingest_prices, ingest_returns, ingest_survey, SurveyTable};
use super::CliError;
use crate::crisis::{annualized_arbitrage_rate, detect_arbitrage, SimConfig, DAYS_PER_YEAR};
use crate::portfolio::{FrontierModel, DEFAULT_REGIME_TOL};
use crate::pricing::{OptionKind, OptionSpec};
use crate::rate_model::{normalize_weights, CategoryMap, SourceEstimate, SourceKind, WeightVector};
use crate::sources::{
    annualize_money_market, arbitrage_return, bond_ytm, constructor_rate, zero_beta_screen, ArbitrageLeg,
    BondSpec, MoneyMarketQuote,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub weights: WeightsConfig,
    pub sources: SourcesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capm: Option<CapmConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<OptionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frontier: Option<FrontierConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey: Option<SurveyConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    /// Raw deal volumes per source; normalized before use. Adds a `custom`
    /// composition next to the two regime presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<[f64; 6]>,
    #[serde(default)]
    pub category_map: CategoryMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcesConfig {
    pub government_bonds: BondSource,
    pub bank_deposits: MoneySource,
    pub interbank_loans: MoneySource,
    pub constructor: ConstructorSource,
    pub zero_beta_shares: ZeroBetaSource,
    pub arbitrage: ArbitrageSource,
}

/// Either a direct `rate` or a list of bonds whose yields are averaged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bonds: Vec<BondSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoneySource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quote: Option<MoneyMarketQuote>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructorSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub premiums: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroBetaSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// `period,asset_id,return` CSV holding the universe and the market series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub returns_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market_id: Option<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_periods_per_year")]
    pub periods_per_year: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_periods_per_year() -> f64 {
    252.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArbitrageSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Completed deals; their annualized returns are averaged.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub legs: Vec<ArbitrageLeg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PriceArbitrage>,
}

/// Scan a dual-listed asset's `date,asset_id,venue,price` history for gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceArbitrage {
    pub file: PathBuf,
    pub asset_id: String,
    pub venues: [String; 2],
    pub threshold: f64,
    #[serde(default)]
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapmConfig {
    pub market_return: f64,
    pub assets: Vec<CapmAsset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapmAsset {
    pub id: String,
    pub beta: f64,
}

/// An option priced at each composed rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionConfig {
    pub id: String,
    pub spot: f64,
    pub strike: f64,
    pub volatility: f64,
    pub time_to_expiry: f64,
    pub kind: OptionKind,
}

impl OptionConfig {
    pub fn spec(&self, rate: f64) -> OptionSpec {
        OptionSpec {
            spot: self.spot,
            strike: self.strike,
            volatility: self.volatility,
            rate,
            time_to_expiry: self.time_to_expiry,
            kind: self.kind,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrontierConfig {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default = "default_points")]
    pub n_points: usize,
    /// Defaults to the span of `mu`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_range: Option<[f64; 2]>,
    /// Extra risk-free rates to classify besides the composed ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub r0_grid: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_points() -> usize {
    21
}

fn default_tol() -> f64 {
    DEFAULT_REGIME_TOL
}

impl FrontierConfig {
    pub fn range(&self) -> (f64, f64) {
        match self.return_range {
            Some([lo, hi]) => (lo, hi),
            None => {
                let lo = self.mu.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = self.mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_seeds")]
    pub n_seeds: usize,
    #[serde(default)]
    pub params: SimConfig,
}

fn default_seeds() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyConfig {
    pub file: PathBuf,
}

/// Source estimates with any non-fatal notes raised while computing them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceEstimates {
    pub estimates: Vec<SourceEstimate>,
    pub warnings: Vec<String>,
}

/// A parsed, validated config with its external files loaded.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub sources: SourceEstimates,
    pub explicit_weights: Option<WeightVector>,
    pub frontier: Option<FrontierModel>,
    pub survey: Option<SurveyTable>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {}", e.message())))
    }
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml(&text)
}

/// Reads, validates and resolves a config file.
pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let config = read_config(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    resolve(config, base)
}

pub fn resolve(config: RunConfig, base_dir: &Path) -> Result<LoadedConfig, CliError> {
    config.weights.category_map.validate()?;
    let explicit_weights = config.weights.explicit.map(normalize_weights).transpose()?;
    let sources = estimate_sources(&config.sources, base_dir)?;

    if let Some(capm) = &config.capm {
        let finite = capm.market_return.is_finite() && capm.assets.iter().all(|a| a.beta.is_finite());
        if !finite {
            return Err(CliError::Input("capm: market_return and betas must be finite".into()));
        }
        check_unique(capm.assets.iter().map(|a| a.id.as_str()), "capm asset")?;
    }
    for opt in &config.options {
        opt.spec(0.0)
            .validate()
            .map_err(|e| CliError::Input(format!("option {}: {e}", opt.id)))?;
    }
    check_unique(config.options.iter().map(|o| o.id.as_str()), "option")?;

    let frontier = match &config.frontier {
        Some(f) => {
            let model = FrontierModel::new(f.mu.clone(), f.sigma.clone())?;
            let (lo, hi) = f.range();
            if f.n_points < 2 || !(lo < hi) {
                return Err(CliError::Input(format!(
                    "frontier: need n_points >= 2 and an increasing return range, got {} points over ({lo}, {hi})",
                    f.n_points
                )));
            }
            if !(f.tol.is_finite() && f.tol >= 0.0) || f.r0_grid.iter().any(|r| !r.is_finite()) {
                return Err(CliError::Input("frontier: tol and r0_grid must be finite".into()));
            }
            Some(model)
        }
        None => None,
    };

    if let Some(sim) = &config.simulation {
        sim.params.validate()?;
        if sim.n_seeds < 2 {
            return Err(CliError::Input("simulation: n_seeds must be >= 2".into()));
        }
    }

    let survey = match &config.survey {
        Some(s) => Some(ingest_survey(&base_dir.join(&s.file))?),
        None => None,
    };

    Ok(LoadedConfig {
        config,
        sources,
        explicit_weights,
        frontier,
        survey,
    })
}

fn check_unique<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> Result<(), CliError> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CliError::Input(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

fn exactly_one(kind: SourceKind, present: &[(&str, bool)]) -> Result<(), CliError> {
    let given: Vec<&str> = present.iter().filter(|p| p.1).map(|p| p.0).collect();
    if given.len() != 1 {
        let names: Vec<&str> = present.iter().map(|p| p.0).collect();
        return Err(CliError::Input(format!(
            "sources.{kind}: give exactly one of {}, found {}",
            names.join(" / "),
            if given.is_empty() { "none".to_string() } else { given.join(" and ") }
        )));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Computes the six source rates described by the config.
pub fn estimate_sources(cfg: &SourcesConfig, base_dir: &Path) -> Result<SourceEstimates, CliError> {
    let mut warnings = Vec::new();
    let mut estimates = Vec::with_capacity(6);
    let mut push = |kind: SourceKind, rate: f64, provenance: String| -> Result<(), CliError> {
        estimates.push(SourceEstimate::new(kind, rate, provenance)?);
        Ok(())
    };

    let b = &cfg.government_bonds;
    exactly_one(SourceKind::GovernmentBonds, &[("rate", b.rate.is_some()), ("bonds", !b.bonds.is_empty())])?;
    match b.rate {
        Some(r) => push(SourceKind::GovernmentBonds, r, "direct".into())?,
        None => {
            let ytms = b.bonds.iter().map(bond_ytm).collect::<Result<Vec<_>, _>>()?;
            push(
                SourceKind::GovernmentBonds,
                mean(&ytms),
                format!("mean yield to maturity of {} bond(s)", ytms.len()),
            )?;
        }
    }

    for (kind, src) in [
        (SourceKind::BankDeposits, &cfg.bank_deposits),
        (SourceKind::InterbankLoans, &cfg.interbank_loans),
    ] {
        exactly_one(kind, &[("rate", src.rate.is_some()), ("quote", src.quote.is_some())])?;
        match (src.rate, &src.quote) {
            (Some(r), _) => push(kind, r, "direct".into())?,
            (None, Some(q)) => push(
                kind,
                annualize_money_market(q)?,
                format!("{}-day quote, simple ACT/{}", q.term_days, q.day_basis),
            )?,
            (None, None) => unreachable!(),
        }
    }

    let c = &cfg.constructor;
    exactly_one(SourceKind::Constructor, &[("rate", c.rate.is_some()), ("base", c.base.is_some())])?;
    match (c.rate, c.base) {
        (Some(r), _) => push(SourceKind::Constructor, r, "direct".into())?,
        (None, Some(base)) => push(
            SourceKind::Constructor,
            constructor_rate(base, &c.premiums)?,
            format!("base plus {} premium(s)", c.premiums.len()),
        )?,
        (None, None) => unreachable!(),
    }

    let z = &cfg.zero_beta_shares;
    exactly_one(
        SourceKind::ZeroBetaShares,
        &[("rate", z.rate.is_some()), ("returns_file", z.returns_file.is_some())],
    )?;
    match (z.rate, &z.returns_file) {
        (Some(r), _) => push(SourceKind::ZeroBetaShares, r, "direct".into())?,
        (None, Some(file)) => {
            let market_id = z
                .market_id
                .as_deref()
                .ok_or_else(|| CliError::Input("sources.zero_beta_shares: market_id is required".into()))?;
            let series = ingest_returns(&base_dir.join(file))?;
            let (market, universe): (Vec<_>, Vec<_>) = series.into_iter().partition(|s| s.asset_id == market_id);
            let market = market.into_iter().next().ok_or_else(|| {
                CliError::Input(format!("sources.zero_beta_shares: market series `{market_id}` not in returns file"))
            })?;
            let screen = zero_beta_screen(&universe, &market, z.epsilon, z.periods_per_year)?;
            warnings.extend(screen.warnings);
            if screen.hits.is_empty() {
                return Err(CliError::Input(format!(
                    "sources.zero_beta_shares: no asset with |beta| <= {}",
                    z.epsilon
                )));
            }
            let rates: Vec<f64> = screen.hits.iter().map(|h| h.mean_return).collect();
            let ids: Vec<&str> = screen.hits.iter().map(|h| h.asset_id.as_str()).collect();
            push(
                SourceKind::ZeroBetaShares,
                mean(&rates),
                format!("mean annualized return of zero-beta shares {}", ids.join(", ")),
            )?;
        }
        (None, None) => unreachable!(),
    }

    let a = &cfg.arbitrage;
    exactly_one(
        SourceKind::Arbitrage,
        &[("rate", a.rate.is_some()), ("legs", !a.legs.is_empty()), ("prices", a.prices.is_some())],
    )?;
    if let Some(r) = a.rate {
        push(SourceKind::Arbitrage, r, "direct".into())?;
    } else if !a.legs.is_empty() {
        let mut rates = Vec::with_capacity(a.legs.len());
        for (i, leg) in a.legs.iter().enumerate() {
            let ret = arbitrage_return(leg)?;
            let rate = ret.annualized.rate().ok_or_else(|| {
                CliError::Input(format!("sources.arbitrage: leg {i} has holding_days = 0 and cannot be annualized"))
            })?;
            rates.push(rate);
        }
        push(
            SourceKind::Arbitrage,
            mean(&rates),
            format!("mean annualized return of {} deal(s)", rates.len()),
        )?;
    } else if let Some(p) = &a.prices {
        let table = ingest_prices(&base_dir.join(&p.file))?;
        let (paths, span_days) = align_venues(&table, &p.asset_id, &p.venues[0], &p.venues[1])
            .map_err(|e| CliError::Input(format!("sources.arbitrage: {e}")))?;
        if span_days <= 0 {
            return Err(CliError::Input(
                "sources.arbitrage: aligned price history must span at least one day".into(),
            ));
        }
        let opps = detect_arbitrage(&paths, p.threshold, p.cost)?;
        if opps.is_empty() {
            warnings.push(format!("arbitrage: no gap in {} reached {}", p.asset_id, p.threshold));
        }
        push(
            SourceKind::Arbitrage,
            annualized_arbitrage_rate(&opps, span_days as f64 / DAYS_PER_YEAR),
            format!(
                "{} cross-venue trade(s) in {} over {span_days} day(s)",
                opps.len(),
                p.asset_id
            ),
        )?;
    }

    Ok(SourceEstimates { estimates, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[sources.government_bonds]
rate = 0.03
[sources.bank_deposits]
quote = { period_return = 0.01, term_days = 30, day_basis = 360 }
[sources.interbank_loans]
rate = 0.02
[sources.constructor]
base = 0.02
premiums = [0.03]
[sources.zero_beta_shares]
rate = 0.04
[sources.arbitrage]
legs = [{ buy_price = 100.0, sell_price = 101.0, costs = 0.5, holding_days = 30 }]
"#;

    #[test]
    fn minimal_config_resolves() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        let loaded = resolve(cfg, Path::new(".")).unwrap();
        let rates: Vec<f64> = loaded.sources.estimates.iter().map(|e| e.rate).collect();
        assert_eq!(rates[0], 0.03);
        assert!((rates[1] - 0.12).abs() < 1e-15);
        assert!((rates[3] - 0.05).abs() < 1e-15);
        assert!((rates[5] - (1.005f64.powf(365.0 / 30.0) - 1.0)).abs() < 1e-15);
        assert!(loaded.frontier.is_none() && loaded.explicit_weights.is_none());
    }

    #[test]
    fn source_needs_exactly_one_method() {
        let both = MINIMAL.replace("[sources.interbank_loans]\nrate = 0.02", "[sources.interbank_loans]\nrate = 0.02\nquote = { period_return = 0.001, term_days = 7 }");
        let err = resolve(RunConfig::from_toml(&both).unwrap(), Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("exactly one"), "{err}");
        let none = MINIMAL.replace("[sources.interbank_loans]\nrate = 0.02", "[sources.interbank_loans]");
        assert!(resolve(RunConfig::from_toml(&none).unwrap(), Path::new(".")).is_err());
    }

    #[test]
    fn unknown_keys_and_missing_sources_rejected() {
        assert!(RunConfig::from_toml(&format!("{MINIMAL}\n[bogus]\nx = 1\n")).is_err());
        assert!(RunConfig::from_toml("[sources.government_bonds]\nrate = 0.03\n").is_err());
    }

    #[test]
    fn zero_holding_leg_rejected() {
        let cfg = MINIMAL.replace("holding_days = 30", "holding_days = 0");
        let err = resolve(RunConfig::from_toml(&cfg).unwrap(), Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_frontier_rejected() {
        let cfg = format!("{MINIMAL}\n[frontier]\nmu = [0.1, 0.2]\nsigma = [[0.04, 0.05], [0.05, 0.04]]\n");
        let err = resolve(RunConfig::from_toml(&cfg).unwrap(), Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("positive definite"), "{err}");
    }
}
