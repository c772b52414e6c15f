//! Estimators turning raw market inputs into one annualized rate per source.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("invalid bond: {0}")]
    InvalidBond(String),
    #[error("yield solver did not converge: {0}")]
    NoConvergence(String),
    #[error("invalid money-market quote: {0}")]
    InvalidQuote(String),
    #[error("non-finite input")]
    NonFinite,
    #[error("series lengths differ ({asset} vs {market})")]
    LengthMismatch { asset: usize, market: usize },
    #[error("need at least two observations, got {0}")]
    TooShort(usize),
    #[error("market return variance is zero")]
    ZeroMarketVariance,
    #[error("invalid screen parameter: {0}")]
    InvalidScreen(String),
    #[error("invalid arbitrage leg: {0}")]
    InvalidLeg(String),
}

// Bond yield to maturity

/// Lower and upper ends of the yield bracket searched by [`bond_ytm`].
pub const YTM_BRACKET: (f64, f64) = (-0.99, 10.0);
/// Absolute price tolerance for [`bond_ytm`].
pub const YTM_PRICE_TOL: f64 = 1e-8;
pub const YTM_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cashflow {
    /// Years from settlement.
    pub time: f64,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BondSpec {
    pub cashflows: Vec<Cashflow>,
    pub price: f64,
}

impl BondSpec {
    /// Bullet bond paying `coupon` at the end of each of `years` years plus `face` at maturity.
    pub fn annual_bullet(face: f64, coupon: f64, years: u32, price: f64) -> Self {
        let cashflows = (1..=years)
            .map(|t| Cashflow {
                time: f64::from(t),
                amount: if t == years { face + coupon } else { coupon },
            })
            .collect();
        Self { cashflows, price }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.cashflows.is_empty() {
            return Err(EstimatorError::InvalidBond("no cashflows".into()));
        }
        let mut prev = 0.0;
        for (i, cf) in self.cashflows.iter().enumerate() {
            if !cf.time.is_finite() || !cf.amount.is_finite() {
                return Err(EstimatorError::InvalidBond(format!("cashflow {i} is not finite")));
            }
            if cf.time <= prev {
                return Err(EstimatorError::InvalidBond(format!(
                    "cashflow times must be positive and strictly increasing (cashflow {i} at {})",
                    cf.time
                )));
            }
            if cf.amount <= 0.0 {
                return Err(EstimatorError::InvalidBond(format!("cashflow {i} amount must be > 0")));
            }
            prev = cf.time;
        }
        let total: f64 = self.cashflows.iter().map(|cf| cf.amount).sum();
        if !self.price.is_finite() || self.price <= 0.0 || self.price >= total * 1.0e3 {
            return Err(EstimatorError::InvalidBond(format!(
                "price {} outside (0, {})",
                self.price,
                total * 1.0e3
            )));
        }
        Ok(())
    }

    /// Present value under annual compounding at `y`.
    pub fn price_at(&self, y: f64) -> f64 {
        self.cashflows
            .iter()
            .map(|cf| cf.amount * (1.0 + y).powf(-cf.time))
            .sum()
    }

    fn price_and_slope(&self, y: f64) -> (f64, f64) {
        self.cashflows.iter().fold((0.0, 0.0), |(p, dp), cf| {
            let df = (1.0 + y).powf(-cf.time);
            (p + cf.amount * df, dp - cf.time * cf.amount * df / (1.0 + y))
        })
    }
}

/// Annually compounded yield equating discounted cashflows to the price.
///
/// Safeguarded Newton iteration inside a shrinking bisection bracket: any
/// Newton step leaving the bracket is replaced by a bisection step, so the
/// search always converges on the monotone price curve.
pub fn bond_ytm(bond: &BondSpec) -> Result<f64, EstimatorError> {
    bond.validate()?;
    let residual = |y: f64| bond.price_at(y) - bond.price;

    let (mut lo, mut hi) = YTM_BRACKET;
    let f_lo = residual(lo);
    let f_hi = residual(hi);
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(EstimatorError::NoConvergence(format!(
            "price {} has no yield in [{lo}, {hi}]",
            bond.price
        )));
    }

    let mut y = 0.05;
    let mut best = (f64::INFINITY, y);
    for _ in 0..YTM_MAX_ITER {
        let (p, dp) = bond.price_and_slope(y);
        let f = p - bond.price;
        if f.abs() < best.0 {
            best = (f.abs(), y);
        }
        if f == 0.0 {
            return Ok(y);
        }
        // Price falls as yield rises.
        if f > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - f / dp;
        let next = if dp < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = next - y;
        y = next;
        if f.abs() <= YTM_PRICE_TOL && step.abs() <= 1e-14 * y.abs().max(1.0) {
            break;
        }
    }
    let f = residual(y);
    if f.abs() < best.0 {
        best = (f.abs(), y);
    }
    if best.0 <= YTM_PRICE_TOL {
        Ok(best.1)
    } else {
        Err(EstimatorError::NoConvergence(format!(
            "residual {} after {YTM_MAX_ITER} iterations",
            best.0
        )))
    }
}

// Deposits and interbank loans

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoneyMarketQuote {
    /// Return over the whole term, as a decimal.
    pub period_return: f64,
    pub term_days: u32,
    #[serde(default = "default_day_basis")]
    pub day_basis: u32,
}

fn default_day_basis() -> u32 {
    365
}

/// Simple (non-compounded) annualization: `period_return * day_basis / term_days`.
pub fn annualize_money_market(quote: &MoneyMarketQuote) -> Result<f64, EstimatorError> {
    if !quote.period_return.is_finite() {
        return Err(EstimatorError::InvalidQuote("period return is not finite".into()));
    }
    if quote.term_days == 0 {
        return Err(EstimatorError::InvalidQuote("term must be at least one day".into()));
    }
    if quote.day_basis != 360 && quote.day_basis != 365 {
        return Err(EstimatorError::InvalidQuote(format!(
            "day basis must be 360 or 365, got {}",
            quote.day_basis
        )));
    }
    Ok(quote.period_return * f64::from(quote.day_basis) / f64::from(quote.term_days))
}

// Constructor

/// Expert-built rate: a base yield plus any number of risk premiums.
pub fn constructor_rate(base: f64, premiums: &[f64]) -> Result<f64, EstimatorError> {
    if !base.is_finite() || premiums.iter().any(|p| !p.is_finite()) {
        return Err(EstimatorError::NonFinite);
    }
    Ok(base + premiums.iter().sum::<f64>())
}

// Zero-beta shares

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub asset_id: String,
    pub returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(asset_id: impl Into<String>, returns: Vec<f64>) -> Self {
        Self {
            asset_id: asset_id.into(),
            returns,
        }
    }

    pub fn mean(&self) -> f64 {
        self.returns.iter().sum::<f64>() / self.returns.len() as f64
    }
}

/// Sample covariance over sample variance (both with `n - 1`).
pub fn estimate_beta(asset: &ReturnSeries, market: &ReturnSeries) -> Result<f64, EstimatorError> {
    let (a, m) = (&asset.returns, &market.returns);
    if a.len() != m.len() {
        return Err(EstimatorError::LengthMismatch {
            asset: a.len(),
            market: m.len(),
        });
    }
    if a.len() < 2 {
        return Err(EstimatorError::TooShort(a.len()));
    }
    if a.iter().chain(m).any(|x| !x.is_finite()) {
        return Err(EstimatorError::NonFinite);
    }
    let mean_a = asset.mean();
    let mean_m = market.mean();
    let (cov, var) = a.iter().zip(m).fold((0.0, 0.0), |(c, v), (x, y)| {
        let dm = y - mean_m;
        (c + (x - mean_a) * dm, v + dm * dm)
    });
    if var == 0.0 {
        return Err(EstimatorError::ZeroMarketVariance);
    }
    // The (n - 1) factors cancel.
    Ok(cov / var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroBetaHit {
    pub asset_id: String,
    pub beta: f64,
    /// Arithmetic mean per-period return times periods per year.
    pub mean_return: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScreenOutcome {
    pub hits: Vec<ZeroBetaHit>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Assets whose beta against `market` is within `epsilon` of zero.
///
/// Assets whose beta cannot be estimated are skipped with a warning. Hits
/// are sorted by `|beta|`, then by asset id.
pub fn zero_beta_screen(
    universe: &[ReturnSeries],
    market: &ReturnSeries,
    epsilon: f64,
    periods_per_year: f64,
) -> Result<ScreenOutcome, EstimatorError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(EstimatorError::InvalidScreen(format!("epsilon must be > 0, got {epsilon}")));
    }
    if !(periods_per_year.is_finite() && periods_per_year > 0.0) {
        return Err(EstimatorError::InvalidScreen(format!(
            "periods per year must be > 0, got {periods_per_year}"
        )));
    }
    let mut out = ScreenOutcome::default();
    for series in universe {
        match estimate_beta(series, market) {
            Ok(beta) if beta.abs() <= epsilon => out.hits.push(ZeroBetaHit {
                asset_id: series.asset_id.clone(),
                beta,
                mean_return: series.mean() * periods_per_year,
            }),
            Ok(_) => {}
            Err(e) => out.warnings.push(format!("skipped {}: {e}", series.asset_id)),
        }
    }
    out.hits.sort_by(|a, b| {
        a.beta
            .abs()
            .total_cmp(&b.beta.abs())
            .then_with(|| a.asset_id.cmp(&b.asset_id))
    });
    Ok(out)
}

// Arbitrage

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageLeg {
    pub buy_price: f64,
    pub sell_price: f64,
    #[serde(default)]
    pub costs: f64,
    #[serde(default)]
    pub holding_days: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Annualized {
    Rate(f64),
    /// Zero holding period: the deal settles instantly and has no time base.
    NotAnnualizable,
}

impl Annualized {
    pub fn rate(self) -> Option<f64> {
        match self {
            Annualized::Rate(r) => Some(r),
            Annualized::NotAnnualizable => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageReturn {
    pub gross: f64,
    pub annualized: Annualized,
}

/// Annually compounded equivalent of earning `gross` over `holding_days`.
///
/// A gross return at or below -100% is a total loss at any horizon.
pub fn annualize_compound(gross: f64, holding_days: u32) -> Annualized {
    if holding_days == 0 {
        return Annualized::NotAnnualizable;
    }
    if gross <= -1.0 {
        return Annualized::Rate(-1.0);
    }
    Annualized::Rate((1.0 + gross).powf(365.0 / f64::from(holding_days)) - 1.0)
}

/// Return of selling on the dear venue and buying on the cheap one.
///
/// The capital base is the buy-side outlay: the short sale funds the purchase,
/// so the trader's own capital is near zero and the buy price is the only
/// non-degenerate denominator.
pub fn arbitrage_return(leg: &ArbitrageLeg) -> Result<ArbitrageReturn, EstimatorError> {
    if !(leg.buy_price.is_finite() && leg.buy_price > 0.0) {
        return Err(EstimatorError::InvalidLeg(format!("buy price must be > 0, got {}", leg.buy_price)));
    }
    if !(leg.sell_price.is_finite() && leg.sell_price > 0.0) {
        return Err(EstimatorError::InvalidLeg(format!("sell price must be > 0, got {}", leg.sell_price)));
    }
    if !(leg.costs.is_finite() && leg.costs >= 0.0) {
        return Err(EstimatorError::InvalidLeg(format!("costs must be >= 0, got {}", leg.costs)));
    }
    let gross = (leg.sell_price - leg.buy_price - leg.costs) / leg.buy_price;
    Ok(ArbitrageReturn {
        gross,
        annualized: annualize_compound(gross, leg.holding_days),
    })
}
