//! Toolkit for composing a trader-specific risk-free rate from six income
//! sources and measuring what moving that rate does to CAPM returns,
//! mean-variance portfolio geometry and Black-Scholes prices.
//!
//! - [`rate_model`]: weights, regime presets and the composite rate.
//! - [`sources`]: per-source rate estimators (bond yield, money market,
//!   constructor, zero-beta screen, arbitrage).
//! - [`pricing`]: CAPM and Black-Scholes with rho.
//! - [`portfolio`]: efficient frontier, GMV and tangency portfolios.
//! - [`crisis`]: seeded dual-venue simulator for the crisis regime.
//! - [`cli`]: file ingestion, run configuration, reports and the command line.

pub mod cli;
pub mod crisis;
pub mod portfolio;
pub mod pricing;
pub mod rate_model;
pub mod sources;

pub use crisis::{batch_compare, run_scenario, BatchSummary, ScenarioResult, SimConfig};
pub use portfolio::{FrontierModel, PortfolioPoint, TangencyKind, TangencyRegime};
pub use pricing::{CapmInput, OptionKind, OptionSpec};
pub use rate_model::{
    compose, normalize_weights, regime_preset, CategoryMap, RateComposition, Regime, SourceEstimate, SourceKind,
    WeightVector,
};
