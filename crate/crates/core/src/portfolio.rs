//! Unconstrained mean-variance geometry with a risk-free asset.
//!
//! All quantities follow from three scalars of the risky universe,
//! `A = 1ᵀΣ⁻¹μ`, `B = μᵀΣ⁻¹μ` and `C = 1ᵀΣ⁻¹1`. The global minimum-variance
//! portfolio earns `A/C`. A risk-free rate below `A/C` puts the tangency
//! portfolio on the upper (efficient) branch of the frontier; above `A/C`
//! the tangency lands on the lower branch and the capital allocation line
//! slopes downward.

use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Symmetry tolerance on the covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Smallest accepted Cholesky pivot.
pub const PIVOT_FLOOR: f64 = 1e-12;
/// Tangency normalizer `1ᵀΣ⁻¹(μ - r0·1)` at or below this magnitude is degenerate.
pub const TANGENCY_TOL: f64 = 1e-10;
pub const DEFAULT_REGIME_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PortfolioError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("covariance matrix is not positive definite: {0}")]
    SingularCovariance(String),
    #[error("tangency portfolio is undefined at r0 = {r0} (GMV return {gmv_return})")]
    DegenerateTangency { r0: f64, gmv_return: f64 },
    #[error("all expected returns are equal; the frontier is a single point")]
    FlatFrontier,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// A validated risky-asset universe with its precomputed frontier scalars.
#[derive(Debug, Clone)]
pub struct FrontierModel {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    inv_ones: DVector<f64>,
    inv_mu: DVector<f64>,
    a: f64,
    b: f64,
    c: f64,
}

impl FrontierModel {
    pub fn new(mu: Vec<f64>, sigma: Vec<Vec<f64>>) -> Result<Self, PortfolioError> {
        let n = mu.len();
        if n < 2 {
            return Err(PortfolioError::InvalidModel(format!("need at least two assets, got {n}")));
        }
        if sigma.len() != n || sigma.iter().any(|row| row.len() != n) {
            return Err(PortfolioError::InvalidModel(format!("covariance must be {n}x{n}")));
        }
        if mu.iter().chain(sigma.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(PortfolioError::InvalidModel("non-finite entry".into()));
        }
        let sigma = DMatrix::from_fn(n, n, |i, j| sigma[i][j]);
        Self::from_parts(DVector::from_vec(mu), sigma)
    }

    pub fn from_parts(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self, PortfolioError> {
        let n = mu.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(PortfolioError::InvalidModel(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = Cholesky::new(sigma.clone())
            .ok_or_else(|| PortfolioError::SingularCovariance("factorization failed".into()))?;
        let l = chol.l_dirty();
        for i in 0..n {
            let pivot = l[(i, i)] * l[(i, i)];
            if !(pivot > PIVOT_FLOOR) {
                return Err(PortfolioError::SingularCovariance(format!(
                    "pivot {i} is {pivot:e}"
                )));
            }
        }
        let ones = DVector::from_element(n, 1.0);
        let inv_ones = chol.solve(&ones);
        let inv_mu = chol.solve(&mu);
        let a = ones.dot(&inv_mu);
        let b = mu.dot(&inv_mu);
        let c = ones.dot(&inv_ones);
        if !(c > 0.0) {
            return Err(PortfolioError::SingularCovariance(format!("1ᵀΣ⁻¹1 = {c}")));
        }
        Ok(Self {
            mu,
            sigma,
            chol,
            inv_ones,
            inv_mu,
            a,
            b,
            c,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// `1ᵀΣ⁻¹μ`
    pub fn a(&self) -> f64 {
        self.a
    }

    /// `μᵀΣ⁻¹μ`
    pub fn b(&self) -> f64 {
        self.b
    }

    /// `1ᵀΣ⁻¹1`
    pub fn c(&self) -> f64 {
        self.c
    }

    /// `B·C - A²`, zero exactly when all expected returns coincide.
    pub fn d(&self) -> f64 {
        self.b * self.c - self.a * self.a
    }

    pub fn gmv_return(&self) -> f64 {
        self.a / self.c
    }

    fn is_flat(&self) -> bool {
        let first = self.mu[0];
        self.mu.iter().all(|&m| m == first)
    }

    /// Expected return and standard deviation of arbitrary weights.
    pub fn evaluate(&self, weights: &[f64]) -> Result<PortfolioPoint, PortfolioError> {
        if weights.len() != self.n_assets() {
            return Err(PortfolioError::InvalidArgument(format!(
                "expected {} weights, got {}",
                self.n_assets(),
                weights.len()
            )));
        }
        Ok(self.point(DVector::from_column_slice(weights)))
    }

    fn point(&self, w: DVector<f64>) -> PortfolioPoint {
        let expected_return = w.dot(&self.mu);
        let variance = w.dot(&(&self.sigma * &w));
        PortfolioPoint {
            weights: w.iter().copied().collect(),
            expected_return,
            stdev: variance.max(0.0).sqrt(),
        }
    }

    /// Solves `Σ x = rhs` with the stored factorization.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioPoint {
    pub weights: Vec<f64>,
    pub expected_return: f64,
    pub stdev: f64,
}

impl PortfolioPoint {
    pub fn sharpe(&self, r0: f64) -> f64 {
        (self.expected_return - r0) / self.stdev
    }
}

/// Global minimum-variance portfolio, `Σ⁻¹1 / C`.
pub fn gmv_portfolio(model: &FrontierModel) -> PortfolioPoint {
    model.point(&model.inv_ones / model.c)
}

/// Fully invested portfolio maximizing `(return - r0) / stdev` on the efficient
/// side, or its mirror on the inefficient side when `r0` exceeds the GMV return.
pub fn tangency_portfolio(model: &FrontierModel, r0: f64) -> Result<PortfolioPoint, PortfolioError> {
    let excess = &model.inv_mu - &model.inv_ones * r0;
    let normalizer = model.a - r0 * model.c;
    if !r0.is_finite() || normalizer.abs() <= TANGENCY_TOL {
        return Err(PortfolioError::DegenerateTangency {
            r0,
            gmv_return: model.gmv_return(),
        });
    }
    Ok(model.point(excess / normalizer))
}

/// Slope of the capital allocation line through the tangency portfolio.
pub fn cal_slope(model: &FrontierModel, r0: f64) -> Result<f64, PortfolioError> {
    let t = tangency_portfolio(model, r0)?;
    Ok(t.sharpe(r0))
}

/// Closed form of [`cal_slope`]: `sign(A - C·r0) · √(B - 2A·r0 + C·r0²)`.
pub fn cal_slope_closed_form(model: &FrontierModel, r0: f64) -> f64 {
    let h = model.b - 2.0 * model.a * r0 + model.c * r0 * r0;
    (model.a - model.c * r0).signum() * h.max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TangencyKind {
    /// `r0` below the GMV return: tangency on the upper branch.
    Efficient,
    /// `r0` at the GMV return: no tangency exists.
    Degenerate,
    /// `r0` above the GMV return: tangency on the lower, dominated branch.
    Inverted,
}

impl fmt::Display for TangencyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TangencyKind::Efficient => "Efficient",
            TangencyKind::Degenerate => "Degenerate",
            TangencyKind::Inverted => "Inverted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyRegime {
    pub kind: TangencyKind,
    pub r0: f64,
    pub gmv_return: f64,
}

pub fn classify_tangency_regime(model: &FrontierModel, r0: f64, tol: f64) -> TangencyRegime {
    let gmv_return = model.gmv_return();
    let kind = if r0 < gmv_return - tol {
        TangencyKind::Efficient
    } else if r0 > gmv_return + tol {
        TangencyKind::Inverted
    } else {
        TangencyKind::Degenerate
    };
    TangencyRegime { kind, r0, gmv_return }
}

/// Minimum-variance portfolios for `n_points` target returns evenly spaced over
/// `range`, in ascending order of target return.
pub fn frontier_points(
    model: &FrontierModel,
    n_points: usize,
    range: (f64, f64),
) -> Result<Vec<PortfolioPoint>, PortfolioError> {
    let (lo, hi) = range;
    if n_points < 2 {
        return Err(PortfolioError::InvalidArgument("need at least two frontier points".into()));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(PortfolioError::InvalidArgument(format!("empty return range ({lo}, {hi})")));
    }
    if model.is_flat() {
        return Err(PortfolioError::FlatFrontier);
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            let m = if i + 1 == n_points { hi } else { lo + step * i as f64 };
            frontier_point(model, m)
        })
        .collect())
}

/// Two-fund closed form: `w(m) = [(C·m - A)·Σ⁻¹μ + (B - A·m)·Σ⁻¹1] / D`.
pub fn frontier_point(model: &FrontierModel, target: f64) -> PortfolioPoint {
    let d = model.d();
    let w = (&model.inv_mu * (model.c * target - model.a) + &model.inv_ones * (model.b - model.a * target)) / d;
    model.point(w)
}

/// Frontier standard deviation at a target return, `√((C·m² - 2A·m + B) / D)`.
pub fn frontier_stdev(model: &FrontierModel, target: f64) -> f64 {
    let var = (model.c * target * target - 2.0 * model.a * target + model.b) / model.d();
    var.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_asset() -> FrontierModel {
        FrontierModel::new(vec![0.06, 0.12], vec![vec![0.04, 0.006], vec![0.006, 0.09]]).unwrap()
    }

    fn three_asset() -> FrontierModel {
        FrontierModel::new(
            vec![0.05, 0.08, 0.12],
            vec![
                vec![0.010, 0.002, 0.001],
                vec![0.002, 0.040, 0.012],
                vec![0.001, 0.012, 0.090],
            ],
        )
        .unwrap()
    }

    fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..2.0)).collect();
        let s: f64 = w.iter().sum();
        if s.abs() < 1e-3 {
            w[0] += 1.0;
        }
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    }

    #[test]
    fn rejects_bad_models() {
        assert!(matches!(
            FrontierModel::new(vec![0.1], vec![vec![0.1]]),
            Err(PortfolioError::InvalidModel(_))
        ));
        assert!(matches!(
            FrontierModel::new(vec![0.1, 0.2], vec![vec![0.1, 0.0]]),
            Err(PortfolioError::InvalidModel(_))
        ));
        assert!(matches!(
            FrontierModel::new(vec![0.1, 0.2], vec![vec![0.1, 0.01], vec![0.02, 0.1]]),
            Err(PortfolioError::InvalidModel(_))
        ));
        assert!(matches!(
            FrontierModel::new(vec![0.1, 0.2], vec![vec![1.0, 1.0], vec![1.0, 1.0]]),
            Err(PortfolioError::SingularCovariance(_))
        ));
        assert!(matches!(
            FrontierModel::new(vec![0.1, 0.2], vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(PortfolioError::SingularCovariance(_))
        ));
    }

    #[test]
    fn gmv_symmetric_cases() {
        let m = FrontierModel::new(vec![0.05, 0.09], vec![vec![0.04, 0.0], vec![0.0, 0.04]]).unwrap();
        let g = gmv_portfolio(&m);
        assert!((g.weights[0] - 0.5).abs() < 1e-15 && (g.weights[1] - 0.5).abs() < 1e-15);

        let n = 5;
        let eye: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        let m = FrontierModel::new((0..n).map(|i| 0.01 * i as f64).collect(), eye).unwrap();
        for w in gmv_portfolio(&m).weights {
            assert!((w - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn gmv_beats_random_portfolios() {
        let m = three_asset();
        let g = gmv_portfolio(&m);
        assert!((g.expected_return - m.gmv_return()).abs() < 1e-14);
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let p = m.evaluate(&random_weights(&mut rng, 3)).unwrap();
            assert!(g.stdev <= p.stdev + 1e-12);
        }
    }

    #[test]
    fn tangency_iid_assets_split_evenly() {
        let m = FrontierModel::new(vec![0.08, 0.08], vec![vec![0.05, 0.0], vec![0.0, 0.05]]).unwrap();
        for r0 in [0.0, 0.03, 0.2] {
            let t = tangency_portfolio(&m, r0).unwrap();
            assert!((t.weights[0] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn tangency_at_gmv_return_is_degenerate() {
        let m = two_asset();
        assert!(matches!(
            tangency_portfolio(&m, m.a() / m.c()),
            Err(PortfolioError::DegenerateTangency { .. })
        ));
        assert!(cal_slope(&m, m.a() / m.c()).is_err());
    }

    #[test]
    fn tangency_matches_grid_search() {
        let m = two_asset();
        let r0 = 0.02;
        assert!(r0 < m.gmv_return());
        let t = tangency_portfolio(&m, r0).unwrap();
        let mut best = (f64::NEG_INFINITY, 0.0);
        let steps = 50_000;
        for i in 0..=steps {
            let w = -2.0 + 5.0 * i as f64 / steps as f64;
            let s = m.evaluate(&[w, 1.0 - w]).unwrap().sharpe(r0);
            if s > best.0 {
                best = (s, w);
            }
        }
        assert!((t.weights[0] - best.1).abs() < 2e-4, "{} vs {}", t.weights[0], best.1);
        assert!(t.sharpe(r0) >= best.0 - 1e-12);
    }

    #[test]
    fn slope_decreases_toward_gmv_return() {
        let m = two_asset();
        let slopes: Vec<f64> = [0.00, 0.01, 0.02].iter().map(|&r| cal_slope(&m, r).unwrap()).collect();
        for (r, s) in [0.00, 0.01, 0.02].iter().zip(&slopes) {
            assert!((s - cal_slope_closed_form(&m, *r)).abs() < 1e-9);
            let t = tangency_portfolio(&m, *r).unwrap();
            assert!((s - (t.expected_return - r) / t.stdev).abs() < 1e-9);
        }
        assert!(slopes[0] > slopes[1] && slopes[1] > slopes[2]);
    }

    #[test]
    fn slope_vanishes_as_r0_approaches_flat_mean() {
        // With equal means the tangency return equals the common mean, so the
        // line through r0 = mean would be flat; just short of it the slope is ~0.
        let m = FrontierModel::new(vec![0.07, 0.07], vec![vec![0.04, 0.01], vec![0.01, 0.09]]).unwrap();
        let s = cal_slope(&m, 0.07 - 1e-9).unwrap();
        assert!(s > 0.0 && s < 1e-8, "{s}");
        assert!(matches!(frontier_points(&m, 3, (0.0, 0.1)), Err(PortfolioError::FlatFrontier)));
    }

    #[test]
    fn classification_examples() {
        let m = two_asset();
        let g = m.gmv_return();
        assert_eq!(classify_tangency_regime(&m, g, DEFAULT_REGIME_TOL).kind, TangencyKind::Degenerate);

        let eff = classify_tangency_regime(&m, g - 0.05, DEFAULT_REGIME_TOL);
        assert_eq!(eff.kind, TangencyKind::Efficient);
        assert!(tangency_portfolio(&m, g - 0.05).unwrap().expected_return > g);

        let inv = classify_tangency_regime(&m, g + 0.05, DEFAULT_REGIME_TOL);
        assert_eq!(inv.kind, TangencyKind::Inverted);
        assert!(tangency_portfolio(&m, g + 0.05).unwrap().expected_return < g);
        assert!(cal_slope(&m, g + 0.05).unwrap() < 0.0);
    }

    #[test]
    fn frontier_contains_gmv_and_dominates_nothing_below_it() {
        let m = three_asset();
        let g = gmv_portfolio(&m);
        let p = frontier_point(&m, m.gmv_return());
        assert!((p.stdev - g.stdev).abs() < 1e-12);
        for (a, b) in p.weights.iter().zip(&g.weights) {
            assert!((a - b).abs() < 1e-10);
        }
        let pts = frontier_points(&m, 41, (0.0, 0.2)).unwrap();
        assert_eq!(pts.len(), 41);
        assert!((pts.last().unwrap().expected_return - 0.2).abs() < 1e-12);
        for w in pts.windows(2) {
            assert!(w[0].expected_return < w[1].expected_return);
        }
        for pt in &pts {
            assert!(pt.stdev >= g.stdev - 1e-12);
            assert!((pt.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((pt.stdev - frontier_stdev(&m, pt.expected_return)).abs() < 1e-10);
        }
    }

    #[test]
    fn frontier_two_asset_matches_line_search() {
        // With two assets the fully invested constraint leaves one free weight;
        // the return target pins it, so the grid point hitting the target is the answer.
        let m = two_asset();
        let target = 0.09;
        let p = frontier_point(&m, target);
        let mut best = f64::INFINITY;
        let steps = 200_000;
        for i in 0..=steps {
            let w = -2.0 + 5.0 * i as f64 / steps as f64;
            let q = m.evaluate(&[w, 1.0 - w]).unwrap();
            if (q.expected_return - target).abs() < 1e-5 {
                best = best.min(q.stdev * q.stdev);
            }
        }
        assert!((p.stdev * p.stdev - best).abs() < 1e-5, "{} vs {best}", p.stdev * p.stdev);
    }

    #[test]
    fn frontier_argument_checks() {
        let m = two_asset();
        assert!(frontier_points(&m, 1, (0.0, 0.1)).is_err());
        assert!(frontier_points(&m, 5, (0.1, 0.1)).is_err());
        assert!(m.evaluate(&[1.0]).is_err());
    }
}
