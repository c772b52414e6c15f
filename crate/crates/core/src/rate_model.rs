//! Composite risk-free rate.
//!
//! A trader's risk-free rate is the volume-weighted average of the annualized
//! returns it earns across six income sources:
//!
//! ```text
//! r0 = W1*r1 + W2*r2 + W3*r3 + W4*r4 + W5*r5 + W6*r6
//! ```
//!
//! The weights are shares of the trader's total deal volume, so they are
//! non-negative and sum to one. Regime presets turn the qualitative
//! significance of each source (high, average, low, minimum) under normal and
//! crisis conditions into such a weight vector.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance on the weight sum.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("all weights are zero")]
    AllZeroWeights,
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("weight {index} is not finite")]
    NonFiniteWeight { index: usize },
    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("no rate supplied for source {0}")]
    MissingSource(SourceKind),
    #[error("source {0} supplied more than once")]
    DuplicateSource(SourceKind),
    #[error("invalid rate {rate} for {kind}: must be finite and > -1")]
    InvalidRate { kind: SourceKind, rate: f64 },
    #[error("invalid category map: {0}")]
    InvalidCategoryMap(String),
    #[error("empty input")]
    EmptyInput,
    #[error("non-finite value in input")]
    NonFinite,
}

/// The six income sources, in weight order W1..W6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    GovernmentBonds,
    BankDeposits,
    InterbankLoans,
    Constructor,
    ZeroBetaShares,
    Arbitrage,
}

impl SourceKind {
    pub const ALL: [SourceKind; 6] = [
        SourceKind::GovernmentBonds,
        SourceKind::BankDeposits,
        SourceKind::InterbankLoans,
        SourceKind::Constructor,
        SourceKind::ZeroBetaShares,
        SourceKind::Arbitrage,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::GovernmentBonds => "government_bonds",
            SourceKind::BankDeposits => "bank_deposits",
            SourceKind::InterbankLoans => "interbank_loans",
            SourceKind::Constructor => "constructor",
            SourceKind::ZeroBetaShares => "zero_beta_shares",
            SourceKind::Arbitrage => "arbitrage",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Annualized rate earned on one source, with a label saying where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEstimate {
    pub kind: SourceKind,
    pub rate: f64,
    pub provenance: String,
}

impl SourceEstimate {
    pub fn new(kind: SourceKind, rate: f64, provenance: impl Into<String>) -> Result<Self, RateError> {
        if !rate.is_finite() || rate <= -1.0 {
            return Err(RateError::InvalidRate { kind, rate });
        }
        Ok(Self {
            kind,
            rate,
            provenance: provenance.into(),
        })
    }
}

/// Six non-negative weights summing to one, indexed by [`SourceKind`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 6]", into = "[f64; 6]")]
pub struct WeightVector([f64; 6]);

impl WeightVector {
    /// Accepts weights that already sum to one; use [`normalize_weights`] otherwise.
    pub fn new(weights: [f64; 6]) -> Result<Self, RateError> {
        check_raw(&weights)?;
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(RateError::WeightSum(sum));
        }
        Ok(Self(weights))
    }

    pub fn get(&self, kind: SourceKind) -> f64 {
        self.0[kind.index()]
    }

    pub fn as_array(&self) -> &[f64; 6] {
        &self.0
    }
}

impl TryFrom<[f64; 6]> for WeightVector {
    type Error = RateError;

    fn try_from(weights: [f64; 6]) -> Result<Self, Self::Error> {
        WeightVector::new(weights)
    }
}

impl From<WeightVector> for [f64; 6] {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

fn check_raw(raw: &[f64; 6]) -> Result<(), RateError> {
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() {
            return Err(RateError::NonFiniteWeight { index });
        }
        if value < 0.0 {
            return Err(RateError::NegativeWeight { index, value });
        }
    }
    Ok(())
}

/// Scales six non-negative volumes into shares summing to one.
pub fn normalize_weights(raw: [f64; 6]) -> Result<WeightVector, RateError> {
    check_raw(&raw)?;
    let sum: f64 = raw.iter().sum();
    if sum == 0.0 {
        return Err(RateError::AllZeroWeights);
    }
    Ok(WeightVector(raw.map(|w| w / sum)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Normal,
    Crisis,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::Normal, Regime::Crisis];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Normal => "normal",
            Regime::Crisis => "crisis",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Regime::Normal),
            "crisis" => Ok(Regime::Crisis),
            other => Err(format!("unknown regime `{other}` (expected normal or crisis)")),
        }
    }
}

/// Qualitative significance of a source. Ordered `Minimum < Low < Average < High`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignificanceLevel {
    Minimum,
    Low,
    Average,
    High,
}

impl SignificanceLevel {
    /// Significance of each source, in W1..W6 order.
    pub fn row(regime: Regime) -> [SignificanceLevel; 6] {
        use SignificanceLevel::*;
        match regime {
            Regime::Normal => [High, Average, Low, Average, Minimum, Minimum],
            Regime::Crisis => [Low, Low, Minimum, Minimum, Minimum, High],
        }
    }
}

/// Cardinal value assigned to each significance level before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryMap {
    pub high: f64,
    pub average: f64,
    pub low: f64,
    pub minimum: f64,
}

impl Default for CategoryMap {
    fn default() -> Self {
        Self {
            high: 0.40,
            average: 0.20,
            low: 0.10,
            minimum: 0.05,
        }
    }
}

impl CategoryMap {
    pub fn value(&self, level: SignificanceLevel) -> f64 {
        match level {
            SignificanceLevel::High => self.high,
            SignificanceLevel::Average => self.average,
            SignificanceLevel::Low => self.low,
            SignificanceLevel::Minimum => self.minimum,
        }
    }

    /// Values must be finite, non-negative, ordered `high >= average >= low >= minimum`,
    /// and `high > 0`. Equal levels are allowed so that a flat map expresses
    /// "every source counts the same".
    pub fn validate(&self) -> Result<(), RateError> {
        let values = [self.high, self.average, self.low, self.minimum];
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RateError::InvalidCategoryMap(
                "values must be finite and non-negative".into(),
            ));
        }
        if !(self.high >= self.average && self.average >= self.low && self.low >= self.minimum) {
            return Err(RateError::InvalidCategoryMap(format!(
                "expected high >= average >= low >= minimum, got {} / {} / {} / {}",
                self.high, self.average, self.low, self.minimum
            )));
        }
        if self.high == 0.0 {
            return Err(RateError::InvalidCategoryMap("all levels are zero".into()));
        }
        Ok(())
    }

    pub fn is_strictly_ordered(&self) -> bool {
        self.high > self.average && self.average > self.low && self.low > self.minimum
    }
}

/// Normalized weights for a regime's significance row.
pub fn regime_preset(regime: Regime, map: &CategoryMap) -> Result<WeightVector, RateError> {
    map.validate()?;
    let raw = SignificanceLevel::row(regime).map(|level| map.value(level));
    normalize_weights(raw)
}

/// A composed rate together with the weights and source rates that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateComposition {
    pub r0: f64,
    pub weights: WeightVector,
    /// One estimate per source, in [`SourceKind::ALL`] order.
    pub rates: Vec<SourceEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
}

impl RateComposition {
    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = Some(regime);
        self
    }

    pub fn rate(&self, kind: SourceKind) -> f64 {
        self.rates[kind.index()].rate
    }

    /// Weighted contribution `W_i * r_i` of each source.
    pub fn contributions(&self) -> [f64; 6] {
        SourceKind::ALL.map(|k| self.weights.get(k) * self.rate(k))
    }
}

/// Arranges estimates in source order, rejecting gaps and repeats.
pub fn order_estimates(rates: &[SourceEstimate]) -> Result<Vec<SourceEstimate>, RateError> {
    let mut slots: [Option<&SourceEstimate>; 6] = [None; 6];
    for est in rates {
        if !est.rate.is_finite() || est.rate <= -1.0 {
            return Err(RateError::InvalidRate {
                kind: est.kind,
                rate: est.rate,
            });
        }
        let slot = &mut slots[est.kind.index()];
        if slot.is_some() {
            return Err(RateError::DuplicateSource(est.kind));
        }
        *slot = Some(est);
    }
    SourceKind::ALL
        .iter()
        .map(|&k| {
            slots[k.index()]
                .cloned()
                .ok_or(RateError::MissingSource(k))
        })
        .collect()
}

/// `r0 = Σ W_i·r_i` over the six sources.
pub fn compose(weights: &WeightVector, rates: &[SourceEstimate]) -> Result<RateComposition, RateError> {
    let rates = order_estimates(rates)?;
    let r0 = weights
        .as_array()
        .iter()
        .zip(&rates)
        .map(|(w, est)| w * est.rate)
        .sum();
    Ok(RateComposition {
        r0,
        weights: *weights,
        rates,
        regime: None,
    })
}

/// Builds six estimates from bare rates in source order, tagging each with `provenance`.
pub fn estimates_from_rates(rates: [f64; 6], provenance: &str) -> Result<Vec<SourceEstimate>, RateError> {
    SourceKind::ALL
        .iter()
        .zip(rates)
        .map(|(&k, r)| SourceEstimate::new(k, r, provenance))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurveySpread {
    pub min: f64,
    pub max: f64,
    pub spread: f64,
}

/// Range of risk-free rates reported by a group of respondents.
pub fn survey_spread(rates: &[f64]) -> Result<SurveySpread, RateError> {
    if rates.is_empty() {
        return Err(RateError::EmptyInput);
    }
    if rates.iter().any(|r| !r.is_finite()) {
        return Err(RateError::NonFinite);
    }
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SurveySpread {
        min,
        max,
        spread: max - min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn normalize_examples() {
        let w = normalize_weights([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(w.as_array(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);

        let w = normalize_weights([1.0; 6]).unwrap();
        for x in w.as_array() {
            assert!((x - 1.0 / 6.0).abs() < 1e-15);
        }

        let w = normalize_weights([2.0, 1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(w.as_array(), &[0.5, 0.25, 0.25, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_errors() {
        assert_eq!(normalize_weights([0.0; 6]), Err(RateError::AllZeroWeights));
        assert!(matches!(
            normalize_weights([1.0, -0.1, 0.0, 0.0, 0.0, 0.0]),
            Err(RateError::NegativeWeight { index: 1, .. })
        ));
        assert!(matches!(
            normalize_weights([1.0, f64::NAN, 0.0, 0.0, 0.0, 0.0]),
            Err(RateError::NonFiniteWeight { index: 1 })
        ));
        assert!(matches!(
            WeightVector::new([0.5, 0.4, 0.0, 0.0, 0.0, 0.0]),
            Err(RateError::WeightSum(_))
        ));
    }

    #[test]
    fn compose_single_source() {
        let w = WeightVector::new([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let rates = estimates_from_rates([0.05, 0.0, 0.0, 0.0, 0.0, 0.0], "test").unwrap();
        assert_eq!(compose(&w, &rates).unwrap().r0, 0.05);
    }

    #[test]
    fn compose_constant_rates() {
        let w = normalize_weights([3.0, 1.0, 4.0, 1.0, 5.0, 9.0]).unwrap();
        let rates = estimates_from_rates([0.03; 6], "test").unwrap();
        assert!(close(compose(&w, &rates).unwrap().r0, 0.03));
    }

    #[test]
    fn compose_mixed_example() {
        // 0.4*0.04 + 0.2*0.03 + 0.1*0.02 + 0.2*0.06 + 0.05*0.035 + 0.05*0.20,
        // summed in exact rational arithmetic.
        let expected = 0.04775;
        let w = WeightVector::new([0.4, 0.2, 0.1, 0.2, 0.05, 0.05]).unwrap();
        let rates = estimates_from_rates([0.04, 0.03, 0.02, 0.06, 0.035, 0.20], "test").unwrap();
        let c = compose(&w, &rates).unwrap();
        assert!(close(c.r0, expected), "{}", c.r0);
        assert_eq!(c.regime, None);
        assert!(close(c.contributions().iter().sum::<f64>(), c.r0));
    }

    #[test]
    fn compose_rejects_missing_and_duplicate() {
        let w = normalize_weights([1.0; 6]).unwrap();
        let mut rates = estimates_from_rates([0.01; 6], "t").unwrap();
        rates.pop();
        assert_eq!(
            compose(&w, &rates).unwrap_err(),
            RateError::MissingSource(SourceKind::Arbitrage)
        );
        let mut rates = estimates_from_rates([0.01; 6], "t").unwrap();
        rates[5].kind = SourceKind::BankDeposits;
        assert_eq!(
            compose(&w, &rates).unwrap_err(),
            RateError::DuplicateSource(SourceKind::BankDeposits)
        );
    }

    #[test]
    fn compose_accepts_any_input_order() {
        let w = WeightVector::new([0.4, 0.2, 0.1, 0.2, 0.05, 0.05]).unwrap();
        let mut rates = estimates_from_rates([0.04, 0.03, 0.02, 0.06, 0.035, 0.20], "t").unwrap();
        let forward = compose(&w, &rates).unwrap();
        rates.reverse();
        let back = compose(&w, &rates).unwrap();
        assert_eq!(forward, back);
    }

    #[test]
    fn source_estimate_rejects_bad_rates() {
        assert!(SourceEstimate::new(SourceKind::Arbitrage, -1.0, "x").is_err());
        assert!(SourceEstimate::new(SourceKind::Arbitrage, f64::INFINITY, "x").is_err());
        assert!(SourceEstimate::new(SourceKind::Arbitrage, -0.5, "x").is_ok());
    }

    #[test]
    fn normal_preset_with_default_map() {
        let w = regime_preset(Regime::Normal, &CategoryMap::default()).unwrap();
        let expected = [0.40, 0.20, 0.10, 0.20, 0.05, 0.05];
        for (a, b) in w.as_array().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn crisis_preset_with_default_map() {
        let w = regime_preset(Regime::Crisis, &CategoryMap::default()).unwrap();
        let expected = [2.0, 2.0, 1.0, 1.0, 1.0, 8.0].map(|x| x / 15.0);
        for (a, b) in w.as_array().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn flat_map_gives_equal_weights() {
        let map = CategoryMap {
            high: 0.3,
            average: 0.3,
            low: 0.3,
            minimum: 0.3,
        };
        for regime in Regime::ALL {
            let w = regime_preset(regime, &map).unwrap();
            for x in w.as_array() {
                assert!((x - 1.0 / 6.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn misordered_map_rejected() {
        let map = CategoryMap {
            high: 0.1,
            average: 0.2,
            low: 0.05,
            minimum: 0.01,
        };
        assert!(matches!(
            regime_preset(Regime::Normal, &map),
            Err(RateError::InvalidCategoryMap(_))
        ));
        let zero = CategoryMap {
            high: 0.0,
            average: 0.0,
            low: 0.0,
            minimum: 0.0,
        };
        assert!(regime_preset(Regime::Crisis, &zero).is_err());
        let negative = CategoryMap {
            minimum: -0.01,
            ..CategoryMap::default()
        };
        assert!(regime_preset(Regime::Crisis, &negative).is_err());
    }

    #[test]
    fn significance_levels_are_ordered() {
        use SignificanceLevel::*;
        assert!(High > Average && Average > Low && Low > Minimum);
    }

    #[test]
    fn survey_spread_examples() {
        let s = survey_spread(&[0.055, 0.21, 0.478]).unwrap();
        assert_eq!((s.min, s.max), (0.055, 0.478));
        assert_eq!(s.spread, 0.423);
        assert_eq!(
            survey_spread(&[0.07]).unwrap(),
            SurveySpread { min: 0.07, max: 0.07, spread: 0.0 }
        );
        assert_eq!(survey_spread(&[0.02; 3]).unwrap().spread, 0.0);
        assert_eq!(survey_spread(&[]), Err(RateError::EmptyInput));
        assert_eq!(survey_spread(&[0.1, f64::NAN]), Err(RateError::NonFinite));
    }

    #[test]
    fn weight_vector_serde_validates() {
        let ok: WeightVector = serde_json::from_str("[1,0,0,0,0,0]").unwrap();
        assert_eq!(ok.get(SourceKind::GovernmentBonds), 1.0);
        assert!(serde_json::from_str::<WeightVector>("[1,1,0,0,0,0]").is_err());
    }

    fn strict_map() -> impl Strategy<Value = CategoryMap> {
        (0.0..1.0f64, 1e-3..1.0f64, 1e-3..1.0f64, 1e-3..1.0f64).prop_map(|(m, a, b, c)| CategoryMap {
            minimum: m,
            low: m + a,
            average: m + a + b,
            high: m + a + b + c,
        })
    }

    #[test]
    fn rate_response_needs_more_than_a_dominant_arbitrage_rate() {
        // Zero-beta shares sit at Minimum in both rows and the crisis row has the
        // smaller total, so a very low zero-beta rate can pull crisis r0 under normal r0.
        let map = CategoryMap::default();
        let rates = estimates_from_rates([0.10, 0.10, 0.10, 0.10, -0.50, 0.1001], "t").unwrap();
        let crisis = compose(&regime_preset(Regime::Crisis, &map).unwrap(), &rates).unwrap().r0;
        let normal = compose(&regime_preset(Regime::Normal, &map).unwrap(), &rates).unwrap().r0;
        assert!(crisis < normal);
    }

    proptest! {
        #[test]
        fn r0_within_rate_bounds(raw in prop::array::uniform6(0.0..1.0f64), rates in prop::array::uniform6(-0.5..0.5f64)) {
            prop_assume!(raw.iter().sum::<f64>() > 1e-6);
            let w = normalize_weights(raw).unwrap();
            let r0 = compose(&w, &estimates_from_rates(rates, "p").unwrap()).unwrap().r0;
            let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(r0 >= lo - 1e-15 && r0 <= hi + 1e-15);
        }

        #[test]
        fn crisis_favours_arbitrage(map in strict_map()) {
            let crisis = regime_preset(Regime::Crisis, &map).unwrap();
            let normal = regime_preset(Regime::Normal, &map).unwrap();
            let arb = crisis.get(SourceKind::Arbitrage);
            for k in &SourceKind::ALL[..5] {
                prop_assert!(arb > crisis.get(*k));
            }
            prop_assert!(arb > normal.get(SourceKind::Arbitrage));
        }
    }
}
