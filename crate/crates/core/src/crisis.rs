//! Seeded Monte-Carlo model of how a crisis feeds through to the composite rate.
//!
//! One share trades on two venues. Both prices share a common lognormal
//! random walk; each venue adds its own independent, one-step lognormal
//! mispricing. A crisis scales every volatility by `crisis_vol_multiplier`,
//! which widens the cross-venue gaps, so more of them clear the arbitrage
//! threshold and each is worth more. The resulting arbitrage rate is composed
//! with five exogenous baseline rates under the regime's preset weights.
//!
//! Randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`, with normal
//! draws from `rand_distr::StandardNormal`. Each step draws, in order, the
//! common shock, the venue A shock and the venue B shock. The paths are then a
//! pure function of the config and the seed; golden files in the test suite
//! pin them bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rate_model::{
    compose, regime_preset, CategoryMap, RateComposition, RateError, Regime, SourceEstimate, SourceKind,
};

pub const DAYS_PER_YEAR: f64 = 365.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("price paths have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("arbitrage threshold must be > 0, got {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Rate(#[from] RateError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub base_price: f64,
    /// Volatility of the factor shared by both venues, per square-root year.
    pub common_vol: f64,
    /// Volatility of each venue's own mispricing, per square-root year.
    pub divergence_vol: f64,
    /// Scale applied to both volatilities in the crisis regime.
    pub crisis_vol_multiplier: f64,
    pub n_steps: u32,
    pub step_days: u32,
    /// Relative price gap that triggers a trade.
    pub arb_threshold: f64,
    /// Round-trip cost per trade, relative to the cheap-venue price.
    pub arb_cost: f64,
    /// Rates of the five non-arbitrage sources, in source order.
    pub baseline_rates: [f64; 5],
    #[serde(default)]
    pub category_map: CategoryMap,
    pub regime: Regime,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            base_price: 100.0,
            common_vol: 0.20,
            divergence_vol: 0.015,
            crisis_vol_multiplier: 3.0,
            n_steps: 250,
            step_days: 1,
            arb_threshold: 0.004,
            arb_cost: 0.003,
            baseline_rates: [0.035, 0.025, 0.03, 0.05, 0.04],
            category_map: CategoryMap::default(),
            regime: Regime::Normal,
            seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if !(self.base_price.is_finite() && self.base_price > 0.0) {
            return bad(format!("base_price must be > 0, got {}", self.base_price));
        }
        for (name, v) in [("common_vol", self.common_vol), ("divergence_vol", self.divergence_vol)] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if !(self.crisis_vol_multiplier.is_finite() && self.crisis_vol_multiplier >= 1.0) {
            return bad(format!(
                "crisis_vol_multiplier must be >= 1, got {}",
                self.crisis_vol_multiplier
            ));
        }
        if self.n_steps == 0 {
            return bad("n_steps must be >= 1".into());
        }
        if self.step_days == 0 {
            return bad("step_days must be >= 1".into());
        }
        if !(self.arb_threshold.is_finite() && self.arb_threshold > 0.0) {
            return bad(format!("arb_threshold must be > 0, got {}", self.arb_threshold));
        }
        if !(self.arb_cost.is_finite() && self.arb_cost >= 0.0) {
            return bad(format!("arb_cost must be >= 0, got {}", self.arb_cost));
        }
        if let Some(r) = self.baseline_rates.iter().find(|r| !r.is_finite() || **r <= -1.0) {
            return bad(format!("baseline rate {r} must be finite and > -1"));
        }
        self.category_map.validate()?;
        Ok(())
    }

    pub fn vol_scale(&self) -> f64 {
        match self.regime {
            Regime::Normal => 1.0,
            Regime::Crisis => self.crisis_vol_multiplier,
        }
    }

    pub fn horizon_years(&self) -> f64 {
        f64::from(self.n_steps) * f64::from(self.step_days) / DAYS_PER_YEAR
    }

    pub fn with_regime(&self, regime: Regime) -> Self {
        Self {
            regime,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPaths {
    pub venue_a: Vec<f64>,
    pub venue_b: Vec<f64>,
}

/// Prices on both venues at steps `0..=n_steps`, starting at `base_price`.
pub fn simulate_dual_listing(config: &SimConfig) -> Result<DualPaths, SimError> {
    config.validate()?;
    let n = config.n_steps as usize;
    let dt = f64::from(config.step_days) / DAYS_PER_YEAR;
    let scale = config.vol_scale();
    let common = config.common_vol * scale;
    let divergence = config.divergence_vol * scale;
    let common_sd = common * dt.sqrt();
    let common_drift = -0.5 * common * common * dt;
    let div_sd = divergence * dt.sqrt();
    let div_drift = -0.5 * divergence * divergence * dt;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut venue_a = Vec::with_capacity(n + 1);
    let mut venue_b = Vec::with_capacity(n + 1);
    venue_a.push(config.base_price);
    venue_b.push(config.base_price);
    let mut log_common = 0.0;
    for _ in 0..n {
        let z_common: f64 = StandardNormal.sample(&mut rng);
        let z_a: f64 = StandardNormal.sample(&mut rng);
        let z_b: f64 = StandardNormal.sample(&mut rng);
        log_common += common_drift + common_sd * z_common;
        let level = config.base_price * log_common.exp();
        venue_a.push(level * (div_drift + div_sd * z_a).exp());
        venue_b.push(level * (div_drift + div_sd * z_b).exp());
    }
    Ok(DualPaths { venue_a, venue_b })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Opportunity {
    pub step: usize,
    /// `|p_a - p_b| / min(p_a, p_b)`.
    pub gap: f64,
    /// `gap - cost`: sell on the dear venue, buy on the cheap one.
    pub gross_return: f64,
}

/// Every step whose relative cross-venue gap reaches `threshold`; at most one trade per step.
pub fn detect_arbitrage(paths: &DualPaths, threshold: f64, cost: f64) -> Result<Vec<Opportunity>, SimError> {
    if paths.venue_a.len() != paths.venue_b.len() {
        return Err(SimError::LengthMismatch(paths.venue_a.len(), paths.venue_b.len()));
    }
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(SimError::InvalidThreshold(threshold));
    }
    Ok(paths
        .venue_a
        .iter()
        .zip(&paths.venue_b)
        .enumerate()
        .filter_map(|(step, (&a, &b))| {
            let gap = (a - b).abs() / a.min(b);
            (gap >= threshold).then_some(Opportunity {
                step,
                gap,
                gross_return: gap - cost,
            })
        })
        .collect())
}

/// Annual return of capital cycled through every detected trade: total gross
/// over the run divided by the run length in years. Zero when there are none.
pub fn annualized_arbitrage_rate(opportunities: &[Opportunity], horizon_years: f64) -> f64 {
    if opportunities.is_empty() {
        return 0.0;
    }
    opportunities.iter().map(|o| o.gross_return).sum::<f64>() / horizon_years
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub regime: Regime,
    pub seed: u64,
    pub paths: DualPaths,
    pub opportunities: Vec<Opportunity>,
    pub mean_arb_return: f64,
    /// Set when no gap reached the threshold and the arbitrage rate defaulted to zero.
    pub no_opportunities: bool,
    pub source_rates: Vec<SourceEstimate>,
    pub composition: RateComposition,
}

pub fn run_scenario(config: &SimConfig) -> Result<ScenarioResult, SimError> {
    let paths = simulate_dual_listing(config)?;
    let opportunities = detect_arbitrage(&paths, config.arb_threshold, config.arb_cost)?;
    let mean_arb_return = annualized_arbitrage_rate(&opportunities, config.horizon_years());

    let mut source_rates = config
        .baseline_rates
        .iter()
        .zip(&SourceKind::ALL[..5])
        .map(|(&rate, &kind)| SourceEstimate::new(kind, rate, "baseline"))
        .collect::<Result<Vec<_>, _>>()?;
    source_rates.push(SourceEstimate::new(
        SourceKind::Arbitrage,
        mean_arb_return,
        format!("simulated cross-venue arbitrage, {} trades", opportunities.len()),
    )?);

    let weights = regime_preset(config.regime, &config.category_map)?;
    let composition = compose(&weights, &source_rates)?.with_regime(config.regime);
    Ok(ScenarioResult {
        regime: config.regime,
        seed: config.seed,
        no_opportunities: opportunities.is_empty(),
        paths,
        opportunities,
        mean_arb_return,
        source_rates,
        composition,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeStats {
    pub mean_r0: f64,
    pub min_r0: f64,
    pub max_r0: f64,
    pub mean_arb_return: f64,
    pub mean_opportunities: f64,
}

impl RegimeStats {
    fn from_runs(runs: &[RunSummary]) -> Self {
        let n = runs.len() as f64;
        Self {
            mean_r0: runs.iter().map(|r| r.r0).sum::<f64>() / n,
            min_r0: runs.iter().map(|r| r.r0).fold(f64::INFINITY, f64::min),
            max_r0: runs.iter().map(|r| r.r0).fold(f64::NEG_INFINITY, f64::max),
            mean_arb_return: runs.iter().map(|r| r.arb_return).sum::<f64>() / n,
            mean_opportunities: runs.iter().map(|r| r.opportunities as f64).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct RunSummary {
    r0: f64,
    arb_return: f64,
    opportunities: usize,
}

impl From<&ScenarioResult> for RunSummary {
    fn from(r: &ScenarioResult) -> Self {
        Self {
            r0: r.composition.r0,
            arb_return: r.mean_arb_return,
            opportunities: r.opportunities.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub first_seed: u64,
    pub n_seeds: usize,
    pub normal: RegimeStats,
    pub crisis: RegimeStats,
    /// Crisis r0 minus normal r0, one entry per seed in seed order.
    pub paired_differences: Vec<f64>,
    pub mean_paired_difference: f64,
    pub crisis_greater_fraction: f64,
}

/// Runs seeds `config.seed .. config.seed + n_seeds` under both regimes.
///
/// Seeds run in parallel; results are merged in seed order so the summary is
/// identical to a sequential run.
pub fn batch_compare(config: &SimConfig, n_seeds: usize) -> Result<BatchSummary, SimError> {
    if n_seeds < 2 {
        return Err(SimError::InvalidConfig(format!("n_seeds must be >= 2, got {n_seeds}")));
    }
    config.validate()?;
    let pairs = (0..n_seeds as u64)
        .into_par_iter()
        .map(|offset| {
            let seeded = config.with_seed(config.seed.wrapping_add(offset));
            let normal = run_scenario(&seeded.with_regime(Regime::Normal))?;
            let crisis = run_scenario(&seeded.with_regime(Regime::Crisis))?;
            Ok((RunSummary::from(&normal), RunSummary::from(&crisis)))
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let normal: Vec<_> = pairs.iter().map(|p| p.0).collect();
    let crisis: Vec<_> = pairs.iter().map(|p| p.1).collect();
    let paired_differences: Vec<f64> = pairs.iter().map(|(n, c)| c.r0 - n.r0).collect();
    let mean_paired_difference = paired_differences.iter().sum::<f64>() / n_seeds as f64;
    let crisis_greater = paired_differences.iter().filter(|d| **d > 0.0).count();
    Ok(BatchSummary {
        first_seed: config.seed,
        n_seeds,
        normal: RegimeStats::from_runs(&normal),
        crisis: RegimeStats::from_runs(&crisis),
        paired_differences,
        mean_paired_difference,
        crisis_greater_fraction: crisis_greater as f64 / n_seeds as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sources::{arbitrage_return, ArbitrageLeg};

    fn quiet() -> SimConfig {
        SimConfig {
            common_vol: 0.0,
            divergence_vol: 0.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_vol_paths_are_flat() {
        let p = simulate_dual_listing(&quiet()).unwrap();
        assert_eq!(p.venue_a.len(), 251);
        assert!(p.venue_a.iter().chain(&p.venue_b).all(|&x| x == 100.0));
    }

    #[test]
    fn unit_multiplier_makes_regimes_identical() {
        let cfg = SimConfig {
            crisis_vol_multiplier: 1.0,
            ..SimConfig::default()
        };
        let normal = simulate_dual_listing(&cfg.with_regime(Regime::Normal)).unwrap();
        let crisis = simulate_dual_listing(&cfg.with_regime(Regime::Crisis)).unwrap();
        assert_eq!(normal, crisis);
    }

    #[test]
    fn paths_positive_and_seed_sensitive() {
        let cfg = SimConfig {
            common_vol: 1.5,
            divergence_vol: 0.8,
            ..SimConfig::default()
        }
        .with_regime(Regime::Crisis);
        let a = simulate_dual_listing(&cfg).unwrap();
        assert!(a.venue_a.iter().chain(&a.venue_b).all(|&x| x > 0.0 && x.is_finite()));
        let b = simulate_dual_listing(&cfg.with_seed(43)).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, simulate_dual_listing(&cfg).unwrap());
    }

    #[test]
    fn invalid_configs_rejected() {
        let base = SimConfig::default();
        for cfg in [
            SimConfig { base_price: 0.0, ..base.clone() },
            SimConfig { common_vol: -0.1, ..base.clone() },
            SimConfig { crisis_vol_multiplier: 0.5, ..base.clone() },
            SimConfig { n_steps: 0, ..base.clone() },
            SimConfig { step_days: 0, ..base.clone() },
            SimConfig { arb_threshold: 0.0, ..base.clone() },
            SimConfig { arb_cost: -0.01, ..base.clone() },
            SimConfig { baseline_rates: [0.0, 0.0, -1.0, 0.0, 0.0], ..base.clone() },
        ] {
            assert!(matches!(simulate_dual_listing(&cfg), Err(SimError::InvalidConfig(_))), "{cfg:?}");
        }
    }

    #[test]
    fn detect_examples() {
        let same = DualPaths {
            venue_a: vec![10.0, 11.0, 12.0],
            venue_b: vec![10.0, 11.0, 12.0],
        };
        assert!(detect_arbitrage(&same, 0.01, 0.0).unwrap().is_empty());

        let doubled = DualPaths {
            venue_a: vec![10.0, 20.0, 10.0],
            venue_b: vec![10.0, 10.0, 10.0],
        };
        let opps = detect_arbitrage(&doubled, 0.5, 0.0).unwrap();
        assert_eq!(opps, vec![Opportunity { step: 1, gap: 1.0, gross_return: 1.0 }]);
        assert!(detect_arbitrage(&doubled, 1.5, 0.0).unwrap().is_empty());

        let leg = ArbitrageLeg { buy_price: 10.0, sell_price: 20.0, costs: 0.0, holding_days: 0 };
        assert_eq!(arbitrage_return(&leg).unwrap().gross, opps[0].gross_return);
    }

    #[test]
    fn detect_errors() {
        let uneven = DualPaths { venue_a: vec![1.0, 2.0], venue_b: vec![1.0] };
        assert_eq!(detect_arbitrage(&uneven, 0.1, 0.0), Err(SimError::LengthMismatch(2, 1)));
        let ok = DualPaths { venue_a: vec![1.0], venue_b: vec![1.0] };
        assert!(matches!(detect_arbitrage(&ok, 0.0, 0.0), Err(SimError::InvalidThreshold(_))));
    }

    #[test]
    fn gaps_grow_with_multiplier() {
        let lo = SimConfig::default().with_regime(Regime::Crisis);
        let hi = SimConfig { crisis_vol_multiplier: 4.0, ..lo.clone() };
        let gaps = |cfg: &SimConfig| {
            let p = simulate_dual_listing(cfg).unwrap();
            p.venue_a
                .iter()
                .zip(&p.venue_b)
                .map(|(a, b)| (a - b).abs() / a.min(*b))
                .collect::<Vec<_>>()
        };
        for (a, b) in gaps(&lo).iter().zip(gaps(&hi)) {
            assert!(b >= a * (1.0 - 1e-12), "{b} < {a}");
        }
    }

    #[test]
    fn quiet_scenario_has_zero_arbitrage() {
        for regime in Regime::ALL {
            let cfg = quiet().with_regime(regime);
            let r = run_scenario(&cfg).unwrap();
            assert!(r.opportunities.is_empty());
            assert!(r.no_opportunities);
            assert_eq!(r.mean_arb_return, 0.0);
            let mut rates = cfg.baseline_rates.to_vec();
            rates.push(0.0);
            let w = regime_preset(regime, &cfg.category_map).unwrap();
            let expected: f64 = w.as_array().iter().zip(&rates).map(|(w, r)| w * r).sum();
            assert!((r.composition.r0 - expected).abs() < 1e-15);
            assert_eq!(r.composition.regime, Some(regime));
        }
    }

    #[test]
    fn scenario_is_deterministic() {
        let cfg = SimConfig::default().with_regime(Regime::Crisis);
        let a = run_scenario(&cfg).unwrap();
        let b = run_scenario(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.opportunities.iter().all(|o| o.gap >= cfg.arb_threshold));
        assert_eq!(a.composition.regime, Some(cfg.regime));
    }

    #[test]
    fn batch_indistinguishable_regimes() {
        let cfg = SimConfig {
            crisis_vol_multiplier: 1.0,
            category_map: CategoryMap { high: 0.2, average: 0.2, low: 0.2, minimum: 0.2 },
            n_steps: 50,
            ..SimConfig::default()
        };
        let s = batch_compare(&cfg, 5).unwrap();
        assert!(s.paired_differences.iter().all(|d| *d == 0.0));
        assert_eq!(s.crisis_greater_fraction, 0.0);
    }

    #[test]
    fn batch_of_two_matches_hand_aggregation() {
        let cfg = SimConfig { n_steps: 60, seed: 9, ..SimConfig::default() };
        let s = batch_compare(&cfg, 2).unwrap();
        let run = |seed, regime| run_scenario(&cfg.with_seed(seed).with_regime(regime)).unwrap().composition.r0;
        let (n9, n10) = (run(9, Regime::Normal), run(10, Regime::Normal));
        let (c9, c10) = (run(9, Regime::Crisis), run(10, Regime::Crisis));
        assert_eq!(s.normal.mean_r0, (n9 + n10) / 2.0);
        assert_eq!(s.normal.min_r0, n9.min(n10));
        assert_eq!(s.crisis.max_r0, c9.max(c10));
        assert_eq!(s.paired_differences, vec![c9 - n9, c10 - n10]);
        let greater = [c9 > n9, c10 > n10].iter().filter(|b| **b).count() as f64 / 2.0;
        assert_eq!(s.crisis_greater_fraction, greater);
        assert!(batch_compare(&cfg, 1).is_err());
    }
}
