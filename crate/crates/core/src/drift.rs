//! The no-arbitrage drift condition under volatility uncertainty.
//!
//! For every maturity `T` the coefficients must admit a market price of
//! risk `kappa` and market prices of uncertainty `lambda^{ij}` with
//!
//! ```text
//! alpha(T) + beta(T) kappa'                                     = 0
//! gamma^{ij}(T) - (beta^i b^j + b^i beta^j)(T) / 2 + beta(T) (lambda^{ij})' = 0
//! ```
//!
//! This module builds coefficients satisfying the condition from `beta`
//! alone, shifts coefficients by given prices, and checks arbitrary
//! coefficients by fitting prices node by node in the least-squares sense.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::coefficients::{integrate_field, integrate_rows, sample, HjmCoefficients};
use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::grid::{TimeGrid, TriangularField};

/// Default relative tolerance for [`check_drift_condition`].
pub const DEFAULT_DRIFT_TOLERANCE: f64 = 1e-8;

/// Market price of risk `kappa` and market prices of uncertainty
/// `lambda^{ij}`, one `dim`-vector per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketPrices {
    dim: usize,
    /// `kappa[k][l]`.
    kappa: Vec<Vec<f64>>,
    /// `lambda[i * dim + j][k][l]`.
    lambda: Vec<Vec<Vec<f64>>>,
}

impl MarketPrices {
    pub fn zero(dim: usize, n_nodes: usize) -> Self {
        Self { dim, kappa: vec![vec![0.0; dim]; n_nodes], lambda: vec![vec![vec![0.0; dim]; n_nodes]; dim * dim] }
    }

    /// One-factor prices from node-indexed series.
    pub fn scalar(kappa: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        if kappa.len() != lambda.len() {
            return Err(Error::InvalidArgument("kappa and lambda must have one value per node".into()));
        }
        if kappa.iter().chain(&lambda).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("market prices must be finite".into()));
        }
        Ok(Self {
            dim: 1,
            kappa: kappa.into_iter().map(|v| vec![v]).collect(),
            lambda: vec![lambda.into_iter().map(|v| vec![v]).collect()],
        })
    }

    /// Constant one-factor prices on `n_nodes` nodes.
    pub fn constant(n_nodes: usize, kappa: f64, lambda: f64) -> Result<Self> {
        Self::scalar(vec![kappa; n_nodes], vec![lambda; n_nodes])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.kappa.len()
    }

    pub fn kappa(&self, k: usize) -> &[f64] {
        &self.kappa[k]
    }

    pub fn lambda(&self, i: usize, j: usize, k: usize) -> &[f64] {
        &self.lambda[i * self.dim + j][k]
    }

    pub fn kappa_series(&self) -> Vec<f64> {
        self.kappa.iter().map(|v| v[0]).collect()
    }

    pub fn lambda_series(&self) -> Vec<f64> {
        self.lambda[0].iter().map(|v| v[0]).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            dim: self.dim,
            kappa: self.kappa.iter().map(|v| v.iter().map(|x| -x).collect()).collect(),
            lambda: self.lambda.iter().map(|s| s.iter().map(|v| v.iter().map(|x| -x).collect()).collect()).collect(),
        }
    }

    pub fn max_abs_kappa(&self) -> f64 {
        self.kappa.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max_abs_lambda(&self) -> f64 {
        self.lambda.iter().flatten().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn ensure_fits(&self, coeffs: &HjmCoefficients) -> Result<()> {
        if self.dim != coeffs.dim() {
            return Err(Error::Dimension { expected: coeffs.dim(), found: self.dim });
        }
        if self.n_nodes() != coeffs.grid().len() {
            return Err(Error::GridMismatch(format!(
                "{} market-price nodes for a grid with {} nodes",
                self.n_nodes(),
                coeffs.grid().len()
            )));
        }
        Ok(())
    }
}

/// `sum_l x^l(k, m) * v[l]`.
fn contract(fields: &[&TriangularField], v: &[f64], k: usize, m: usize) -> f64 {
    fields.iter().zip(v).map(|(f, x)| f.get(k, m) * x).sum()
}

/// Risk-neutral coefficients for `beta`: `alpha = 0`,
/// `gamma = (beta b + b beta) / 2`.
pub fn generate_risk_neutral(beta: &CoefficientField, grid: TimeGrid) -> Result<HjmCoefficients> {
    generate_risk_neutral_multi(std::slice::from_ref(beta), grid)
}

/// Multi-factor form of [`generate_risk_neutral`]: `gamma^{ij} = (beta^i b^j + b^i beta^j) / 2`.
pub fn generate_risk_neutral_multi(betas: &[CoefficientField], grid: TimeGrid) -> Result<HjmCoefficients> {
    let d = betas.len();
    let beta: Vec<TriangularField> = betas.iter().map(|f| sample(grid, f)).collect();
    let b: Vec<TriangularField> = betas.iter().zip(&beta).map(|(f, s)| integrate_field(grid, f, s)).collect();
    let mut gamma = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            gamma.push(TriangularField::from_fn(grid.len(), |k, m| {
                0.5 * (beta[i].get(k, m) * b[j].get(k, m) + b[i].get(k, m) * beta[j].get(k, m))
            }));
        }
    }
    let c = gamma.iter().map(|g| integrate_rows(grid, g)).collect();
    let zero = TriangularField::zeros(grid.len());
    HjmCoefficients::from_parts(grid, d, zero.clone(), beta, gamma, zero, b, c)
}

/// Rewrites the dynamics in terms of the shifted driver
/// `B̄ = B - ∫ kappa du - sum ∫ lambda^{ij} d<B^i,B^j>`:
/// `alpha += beta kappa'`, `gamma^{ij} += beta (lambda^{ij})'`, and the
/// integrated fields accordingly.
pub fn apply_market_prices(coeffs: &HjmCoefficients, prices: &MarketPrices) -> Result<HjmCoefficients> {
    prices.ensure_fits(coeffs)?;
    let d = coeffs.dim();
    let grid = coeffs.grid();
    let n = grid.len();
    let betas: Vec<&TriangularField> = (0..d).map(|l| coeffs.beta_field(l)).collect();
    let bs: Vec<&TriangularField> = (0..d).map(|l| coeffs.b_field(l)).collect();
    let alpha = TriangularField::from_fn(n, |k, m| coeffs.alpha(k, m) + contract(&betas, prices.kappa(k), k, m));
    let a = TriangularField::from_fn(n, |k, m| coeffs.a_field().get(k, m) + contract(&bs, prices.kappa(k), k, m));
    let mut gamma = Vec::with_capacity(d * d);
    let mut c = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let (g, cc) = (coeffs.gamma_field(i, j), coeffs.c_field(i, j));
            gamma
                .push(TriangularField::from_fn(n, |k, m| g.get(k, m) + contract(&betas, prices.lambda(i, j, k), k, m)));
            c.push(TriangularField::from_fn(n, |k, m| cc.get(k, m) + contract(&bs, prices.lambda(i, j, k), k, m)));
        }
    }
    let (_, _, _, beta, _, _, b, _) = coeffs.clone().into_parts();
    HjmCoefficients::from_parts(grid, d, alpha, beta, gamma, a, b, c)
}

/// Residuals of the drift condition for fitted market prices.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftResidualReport {
    grid: TimeGrid,
    pub residual_alpha: TriangularField,
    /// Indexed `i * dim + j`.
    pub residual_gamma: Vec<TriangularField>,
    pub max_abs: f64,
    pub rms: f64,
    /// Absolute tolerance actually applied: relative tolerance times
    /// `max(1, coefficient scale)`.
    pub tolerance: f64,
    pub certificate: bool,
    /// Nodes where `beta(t, .)` vanishes but a drift term does not:
    /// no market price exists there.
    pub degenerate_nodes: Vec<(usize, String)>,
    pub max_abs_kappa: f64,
    pub max_abs_lambda: f64,
}

impl DriftResidualReport {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn summary(&self) -> String {
        format!(
            "drift condition: max|residual|={:.3e} rms={:.3e} tolerance={:.3e} max|kappa|={:.6e} max|lambda|={:.6e} degenerate_nodes={} certificate={}",
            self.max_abs,
            self.rms,
            self.tolerance,
            self.max_abs_kappa,
            self.max_abs_lambda,
            self.degenerate_nodes.len(),
            self.certificate
        )
    }
}

/// Minimal-norm least-squares solution of `X v = y`.
fn min_norm_lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let eps = smax * 1e-12 * (x.nrows().max(x.ncols()) as f64);
    svd.solve(y, eps).expect("u and v_t were computed")
}

struct NodeFit {
    kappa: Vec<f64>,
    lambda: Vec<Vec<f64>>,
    degenerate: Option<String>,
}

fn fit_node(coeffs: &HjmCoefficients, k: usize) -> NodeFit {
    let d = coeffs.dim();
    let n = coeffs.grid().len();
    let rows = n - k;
    let x = DMatrix::from_fn(rows, d, |r, l| coeffs.beta_field(l).get(k, k + r));
    let beta_vanishes = x.iter().all(|&v| v == 0.0);
    let y_alpha = DVector::from_fn(rows, |r, _| -coeffs.alpha(k, k + r));
    let kappa: Vec<f64> = min_norm_lstsq(&x, &y_alpha).iter().copied().collect();
    let mut degenerate = Vec::new();
    if beta_vanishes && y_alpha.iter().any(|&v| v != 0.0) {
        degenerate.push("no market price of risk exists".to_string());
    }
    let mut lambda = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let y = DVector::from_fn(rows, |r, _| -uncertain_excess(coeffs, i, j, k, k + r));
            if beta_vanishes && y.iter().any(|&v| v != 0.0) {
                degenerate.push(format!("no market price of uncertainty ({i},{j}) exists"));
            }
            lambda.push(min_norm_lstsq(&x, &y).iter().copied().collect());
        }
    }
    let degenerate = (!degenerate.is_empty()).then(|| degenerate.join("; "));
    NodeFit { kappa, lambda, degenerate }
}

/// `gamma^{ij} - (beta^i b^j + b^i beta^j) / 2` at `(k, m)`.
fn uncertain_excess(coeffs: &HjmCoefficients, i: usize, j: usize, k: usize, m: usize) -> f64 {
    let (bi, bj) = (coeffs.beta_field(i).get(k, m), coeffs.beta_field(j).get(k, m));
    let (ii, ij) = (coeffs.b_field(i).get(k, m), coeffs.b_field(j).get(k, m));
    coeffs.gamma_field(i, j).get(k, m) - 0.5 * (bi * ij + ii * bj)
}

/// Fits market prices node by node (minimal-norm least squares over the
/// maturities `T >= t`) and reports the residuals of the drift condition.
///
/// `tolerance` is relative to `max(1, coefficient scale)`.
pub fn check_drift_condition(coeffs: &HjmCoefficients, tolerance: f64) -> Result<(MarketPrices, DriftResidualReport)> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be non-negative, got {tolerance}")));
    }
    let d = coeffs.dim();
    let grid = coeffs.grid();
    let n = grid.len();
    let fits: Vec<NodeFit> = (0..n).into_par_iter().map(|k| fit_node(coeffs, k)).collect();

    let mut prices = MarketPrices::zero(d, n);
    let mut degenerate_nodes = Vec::new();
    for (k, fit) in fits.into_iter().enumerate() {
        prices.kappa[k] = fit.kappa;
        for (ij, l) in fit.lambda.into_iter().enumerate() {
            prices.lambda[ij][k] = l;
        }
        if let Some(msg) = fit.degenerate {
            degenerate_nodes.push((k, msg));
        }
    }

    let betas: Vec<&TriangularField> = (0..d).map(|l| coeffs.beta_field(l)).collect();
    let residual_alpha =
        TriangularField::from_fn(n, |k, m| coeffs.alpha(k, m) + contract(&betas, prices.kappa(k), k, m));
    let mut residual_gamma = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            residual_gamma.push(TriangularField::from_fn(n, |k, m| {
                uncertain_excess(coeffs, i, j, k, m) + contract(&betas, prices.lambda(i, j, k), k, m)
            }));
        }
    }

    let all = || std::iter::once(&residual_alpha).chain(&residual_gamma).flat_map(|f| f.values());
    let max_abs = all().fold(0.0f64, |a, v| a.max(v.abs()));
    let count = all().count() as f64;
    let rms = (all().map(|v| v * v).sum::<f64>() / count).sqrt();
    let abs_tol = tolerance * coeffs.scale().max(1.0);
    let report = DriftResidualReport {
        grid,
        residual_alpha,
        residual_gamma,
        max_abs,
        rms,
        tolerance: abs_tol,
        certificate: max_abs <= abs_tol,
        degenerate_nodes,
        max_abs_kappa: prices.max_abs_kappa(),
        max_abs_lambda: prices.max_abs_lambda(),
    };
    Ok((prices, report))
}

/// Classical HJM drift condition with market price `kappa + sum_i lambda^{ii}`
/// and drift `alpha + sum_i gamma^{ii}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalReductionReport {
    pub residual: TriangularField,
    pub max_abs: f64,
}

/// `alpha + sum_i gamma^{ii}` on the grid.
pub fn combined_drift(coeffs: &HjmCoefficients) -> TriangularField {
    let d = coeffs.dim();
    TriangularField::from_fn(coeffs.grid().len(), |k, m| {
        coeffs.alpha(k, m) + (0..d).map(|i| coeffs.gamma_field(i, i).get(k, m)).sum::<f64>()
    })
}

pub fn classical_reduction_check(coeffs: &HjmCoefficients, prices: &MarketPrices) -> Result<ClassicalReductionReport> {
    prices.ensure_fits(coeffs)?;
    let d = coeffs.dim();
    let drift = combined_drift(coeffs);
    let betas: Vec<&TriangularField> = (0..d).map(|l| coeffs.beta_field(l)).collect();
    let residual = TriangularField::from_fn(coeffs.grid().len(), |k, m| {
        let beta_b: f64 = (0..d).map(|i| coeffs.beta_field(i).get(k, m) * coeffs.b_field(i).get(k, m)).sum();
        let market: Vec<f64> =
            (0..d).map(|l| prices.kappa(k)[l] + (0..d).map(|i| prices.lambda(i, i, k)[l]).sum::<f64>()).collect();
        drift.get(k, m) - beta_b + contract(&betas, &market, k, m)
    });
    let max_abs = residual.max_abs();
    Ok(ClassicalReductionReport { residual, max_abs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> TimeGrid {
        TimeGrid::new(1.0, 40).unwrap()
    }

    #[test]
    fn ho_lee_risk_neutral_gamma() {
        let g = grid();
        let c = generate_risk_neutral(&CoefficientField::ho_lee(), g).unwrap();
        for k in 0..g.len() {
            for m in k..g.len() {
                assert!((c.gamma(k, m) - (g.t(m) - g.t(k))).abs() < 1e-15);
                assert_eq!(c.alpha(k, m), 0.0);
            }
        }
    }

    #[test]
    fn hull_white_risk_neutral_gamma() {
        let g = grid();
        let theta = 0.5;
        let c = generate_risk_neutral(&CoefficientField::hull_white(theta), g).unwrap();
        let closed = CoefficientField::HullWhiteDrift { theta };
        for k in 0..g.len() {
            for m in k..g.len() {
                assert!((c.gamma(k, m) - closed.value(g.t(k), g.t(m))).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_beta_gives_zero_drift() {
        let c = generate_risk_neutral(&CoefficientField::Zero, grid()).unwrap();
        assert_eq!(c.scale(), 0.0);
    }

    #[test]
    fn round_trip_gives_zero_prices() {
        for beta in [CoefficientField::ho_lee(), CoefficientField::hull_white(0.25), CoefficientField::hull_white(1.0)]
        {
            let c = generate_risk_neutral(&beta, grid()).unwrap();
            let (p, r) = check_drift_condition(&c, DEFAULT_DRIFT_TOLERANCE).unwrap();
            assert!(r.max_abs <= 1e-12);
            assert!(r.certificate);
            assert_eq!(p.max_abs_kappa(), 0.0);
            assert_eq!(p.max_abs_lambda(), 0.0);
        }
    }

    #[test]
    fn constant_market_price_of_risk_is_recovered() {
        let g = grid();
        let c = HjmCoefficients::from_fields(
            g,
            &CoefficientField::Constant(-0.1),
            &CoefficientField::ho_lee(),
            &CoefficientField::TimeToMaturity { scale: 1.0 },
        )
        .unwrap();
        let (p, r) = check_drift_condition(&c, DEFAULT_DRIFT_TOLERANCE).unwrap();
        assert!(p.kappa_series().iter().all(|k| (k - 0.1).abs() < 1e-14));
        assert!(p.max_abs_lambda() < 1e-14);
        assert!(r.certificate, "{}", r.summary());
    }

    #[test]
    fn maturity_dependent_requirement_fails() {
        let g = grid();
        let c = HjmCoefficients::from_fields(
            g,
            &CoefficientField::MaturityLinear { intercept: 0.0, slope: 1.0 },
            &CoefficientField::ho_lee(),
            &CoefficientField::TimeToMaturity { scale: 1.0 },
        )
        .unwrap();
        let (p, r) = check_drift_condition(&c, DEFAULT_DRIFT_TOLERANCE).unwrap();
        assert!(!r.certificate);
        // Least squares fits kappa_t = -mean of T over [t, tau].
        let k = 10;
        let mean_t: f64 = (k..g.len()).map(|m| g.t(m)).sum::<f64>() / (g.len() - k) as f64;
        assert!((p.kappa(k)[0] + mean_t).abs() < 1e-12);
        // Only the last node, with a single maturity, is fitted exactly.
        assert!(r.residual_alpha.get(g.n_steps(), g.n_steps()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_node_is_reported() {
        let g = grid();
        let c = HjmCoefficients::from_fields(
            g,
            &CoefficientField::Constant(0.3),
            &CoefficientField::Zero,
            &CoefficientField::Zero,
        )
        .unwrap();
        let (_, r) = check_drift_condition(&c, DEFAULT_DRIFT_TOLERANCE).unwrap();
        assert!(!r.certificate);
        assert_eq!(r.degenerate_nodes.len(), g.len());
        assert!(r.degenerate_nodes[0].1.contains("no market price"));
    }

    #[test]
    fn shift_removes_drift() {
        let g = grid();
        let c = HjmCoefficients::from_fields(
            g,
            &CoefficientField::Constant(-0.1),
            &CoefficientField::ho_lee(),
            &CoefficientField::Zero,
        )
        .unwrap();
        let shifted = apply_market_prices(&c, &MarketPrices::constant(g.len(), 0.1, 0.0).unwrap()).unwrap();
        assert!(shifted.alpha_field().max_abs() < 1e-15);
        assert!(shifted.a_field().max_abs() < 1e-15);
        let same = apply_market_prices(&c, &MarketPrices::zero(1, g.len())).unwrap();
        assert_eq!(same, c);
    }

    #[test]
    fn two_factor_algebra() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let betas = [CoefficientField::ho_lee(), CoefficientField::hull_white(0.8)];
        let c = generate_risk_neutral_multi(&betas, g).unwrap();
        assert_eq!(c.dim(), 2);
        let (p, r) = check_drift_condition(&c, DEFAULT_DRIFT_TOLERANCE).unwrap();
        assert!(r.certificate && r.max_abs < 1e-12);
        assert_eq!(p.max_abs_kappa(), 0.0);
        // gamma^{01} == gamma^{10}
        for k in 0..g.len() {
            for m in k..g.len() {
                assert_eq!(c.gamma_field(0, 1).get(k, m), c.gamma_field(1, 0).get(k, m));
            }
        }
        // Shift with a known kappa and recover it: the two beta columns are
        // linearly independent over the maturities, so the solution is unique
        // except at the last two nodes.
        let mut prices = MarketPrices::zero(2, g.len());
        for k in 0..g.len() {
            prices.kappa[k] = vec![0.05, -0.02];
        }
        let shifted = apply_market_prices(&c, &prices.negated()).unwrap();
        let (fitted, r) = check_drift_condition(&shifted, DEFAULT_DRIFT_TOLERANCE).unwrap();
        assert!(r.certificate, "{}", r.summary());
        for k in 0..g.len() - 2 {
            assert!((fitted.kappa(k)[0] - 0.05).abs() < 1e-10);
            assert!((fitted.kappa(k)[1] + 0.02).abs() < 1e-10);
        }
    }

    #[test]
    fn classical_reduction_identities() {
        let g = grid();
        let c = generate_risk_neutral(&CoefficientField::ho_lee(), g).unwrap();
        let r = classical_reduction_check(&c, &MarketPrices::zero(1, g.len())).unwrap();
        assert!(r.max_abs <= 1e-12);

        let bad = HjmCoefficients::from_fields(
            g,
            &CoefficientField::MaturityLinear { intercept: 0.02, slope: 0.3 },
            &CoefficientField::hull_white(0.4),
            &CoefficientField::Constant(0.1),
        )
        .unwrap();
        let prices = MarketPrices::constant(g.len(), 0.03, -0.01).unwrap();
        let red = classical_reduction_check(&bad, &prices).unwrap();
        let shifted = apply_market_prices(&bad, &prices).unwrap();
        // residual_alpha + residual_gamma under the same prices
        for k in 0..g.len() {
            for m in k..g.len() {
                let ra = shifted.alpha(k, m);
                let rg = shifted.gamma(k, m) - bad.beta(k, m) * bad.b(k, m);
                assert!((red.residual.get(k, m) - (ra + rg)).abs() < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn shift_then_unshift_restores(kappa in -1.0f64..1.0, lambda in -1.0f64..1.0, theta in 0.05f64..2.0) {
            let g = TimeGrid::new(1.0, 16).unwrap();
            let c = generate_risk_neutral(&CoefficientField::hull_white(theta), g).unwrap();
            let p = MarketPrices::constant(g.len(), kappa, lambda).unwrap();
            let back = apply_market_prices(&apply_market_prices(&c, &p).unwrap(), &p.negated()).unwrap();
            for (x, y) in back.alpha_field().values().zip(c.alpha_field().values()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            for (x, y) in back.gamma_field(0, 0).values().zip(c.gamma_field(0, 0).values()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            for (x, y) in back.c_field(0, 0).values().zip(c.c_field(0, 0).values()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }

        #[test]
        fn certificate_is_sound(kappa in -0.5f64..0.5, lambda in -0.5f64..0.5, theta in 0.05f64..2.0) {
            // Coefficients built by shifting risk-neutral ones are certified,
            // and applying the fitted prices removes both drifts.
            let g = TimeGrid::new(1.0, 16).unwrap();
            let rn = generate_risk_neutral(&CoefficientField::hull_white(theta), g).unwrap();
            let c = apply_market_prices(&rn, &MarketPrices::constant(g.len(), kappa, lambda).unwrap()).unwrap();
            let (p, r) = check_drift_condition(&c, DEFAULT_DRIFT_TOLERANCE).unwrap();
            prop_assert!(r.certificate);
            let fixed = apply_market_prices(&c, &p).unwrap();
            for k in 0..g.len() {
                for m in k..g.len() {
                    prop_assert!(fixed.alpha(k, m).abs() <= r.tolerance);
                    prop_assert!((fixed.gamma(k, m) - c.beta(k, m) * c.b(k, m)).abs() <= r.tolerance);
                }
            }
            prop_assert!((p.kappa(3)[0] + kappa).abs() < 1e-10);
        }
    }
}
