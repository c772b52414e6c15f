//! CAPM expected returns and Black-Scholes European option pricing, both
//! parameterized by the risk-free rate so the effect of moving it can be read off.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("non-finite CAPM input")]
    NonFiniteCapm,
    #[error("invalid option: {0}")]
    InvalidOption(String),
}

// CAPM

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapmInput {
    pub r0: f64,
    pub beta: f64,
    pub market_return: f64,
}

/// `r0 + beta * (market_return - r0)`.
pub fn capm_expected_return(input: &CapmInput) -> Result<f64, PricingError> {
    if !(input.r0.is_finite() && input.beta.is_finite() && input.market_return.is_finite()) {
        return Err(PricingError::NonFiniteCapm);
    }
    Ok(input.r0 + input.beta * (input.market_return - input.r0))
}

/// Derivative of the CAPM return with respect to `r0`, i.e. `1 - beta`.
///
/// Positive below beta one: a lower risk-free rate lowers the expected
/// return. Negative above beta one: a lower rate raises it.
pub fn capm_rate_sensitivity(beta: f64) -> f64 {
    1.0 - beta
}

// Black-Scholes

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Call,
    Put,
}

impl fmt::Display for OptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptionKind::Call => "call",
            OptionKind::Put => "put",
        })
    }
}

impl std::str::FromStr for OptionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "call" => Ok(OptionKind::Call),
            "put" => Ok(OptionKind::Put),
            other => Err(format!("unknown option kind `{other}` (expected call or put)")),
        }
    }
}

/// A European option on a non-dividend-paying underlying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub spot: f64,
    pub strike: f64,
    /// Annualized, per square-root year.
    pub volatility: f64,
    /// Continuously compounded.
    pub rate: f64,
    /// Years.
    pub time_to_expiry: f64,
    pub kind: OptionKind,
}

impl OptionSpec {
    pub fn validate(&self) -> Result<(), PricingError> {
        let bad = |what: &str| Err(PricingError::InvalidOption(what.to_string()));
        if !(self.spot.is_finite() && self.spot > 0.0) {
            return bad("spot must be > 0");
        }
        if !(self.strike.is_finite() && self.strike > 0.0) {
            return bad("strike must be > 0");
        }
        if !(self.volatility.is_finite() && self.volatility >= 0.0) {
            return bad("volatility must be >= 0");
        }
        if !self.rate.is_finite() {
            return bad("rate must be finite");
        }
        if !(self.time_to_expiry.is_finite() && self.time_to_expiry >= 0.0) {
            return bad("time to expiry must be >= 0");
        }
        Ok(())
    }

    pub fn with_rate(self, rate: f64) -> Self {
        Self { rate, ..self }
    }

    fn discounted_strike(&self) -> f64 {
        self.strike * (-self.rate * self.time_to_expiry).exp()
    }

    fn d1_d2(&self) -> (f64, f64) {
        let vol_sqrt_t = self.volatility * self.time_to_expiry.sqrt();
        let d1 = ((self.spot / self.strike).ln()
            + (self.rate + 0.5 * self.volatility * self.volatility) * self.time_to_expiry)
            / vol_sqrt_t;
        (d1, d1 - vol_sqrt_t)
    }
}

/// Standard normal cumulative distribution, `erfc(-x/√2)/2`.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Black-Scholes price. At zero expiry or zero volatility the price is the
/// discounted intrinsic value.
pub fn bs_price(option: &OptionSpec) -> Result<f64, PricingError> {
    option.validate()?;
    let df_strike = option.discounted_strike();
    if option.time_to_expiry == 0.0 || option.volatility == 0.0 {
        return Ok(match option.kind {
            OptionKind::Call => (option.spot - df_strike).max(0.0),
            OptionKind::Put => (df_strike - option.spot).max(0.0),
        });
    }
    let (d1, d2) = option.d1_d2();
    Ok(match option.kind {
        OptionKind::Call => option.spot * norm_cdf(d1) - df_strike * norm_cdf(d2),
        OptionKind::Put => df_strike * norm_cdf(-d2) - option.spot * norm_cdf(-d1),
    })
}

/// Sensitivity of the price to the rate. Requires positive expiry and volatility.
pub fn bs_rho(option: &OptionSpec) -> Result<f64, PricingError> {
    option.validate()?;
    if option.time_to_expiry <= 0.0 || option.volatility <= 0.0 {
        return Err(PricingError::InvalidOption(
            "rho requires time to expiry > 0 and volatility > 0".into(),
        ));
    }
    let (_, d2) = option.d1_d2();
    let k_t_df = option.strike * option.time_to_expiry * (-option.rate * option.time_to_expiry).exp();
    Ok(match option.kind {
        OptionKind::Call => k_t_df * norm_cdf(d2),
        OptionKind::Put => -k_t_df * norm_cdf(-d2),
    })
}

// Rate shift

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    Unchanged,
}

impl Direction {
    pub fn of(delta: f64) -> Self {
        if delta > 0.0 {
            Direction::Up
        } else if delta < 0.0 {
            Direction::Down
        } else {
            Direction::Unchanged
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelShift {
    pub before: f64,
    pub after: f64,
    pub delta: f64,
    pub direction: Direction,
}

impl ModelShift {
    pub fn new(before: f64, after: f64) -> Self {
        let delta = after - before;
        Self {
            before,
            after,
            delta,
            direction: Direction::of(delta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateShiftReport {
    pub r0_old: f64,
    pub r0_new: f64,
    pub capm: ModelShift,
    /// `1 - beta`; the CAPM delta equals this times the rate change.
    pub capm_sensitivity: f64,
    pub option: ModelShift,
}

/// Reprices the CAPM return and the option at two risk-free rates. The
/// `r0` in `capm` and the `rate` in `option` are replaced by each of the two rates.
pub fn rate_shift_report(
    option: &OptionSpec,
    capm: &CapmInput,
    r0_old: f64,
    r0_new: f64,
) -> Result<RateShiftReport, PricingError> {
    let capm_at = |r0| capm_expected_return(&CapmInput { r0, ..*capm });
    let option_at = |r0| bs_price(&option.with_rate(r0));
    Ok(RateShiftReport {
        r0_old,
        r0_new,
        capm: ModelShift::new(capm_at(r0_old)?, capm_at(r0_new)?),
        capm_sensitivity: capm_rate_sensitivity(capm.beta),
        option: ModelShift::new(option_at(r0_old)?, option_at(r0_new)?),
    })
}
