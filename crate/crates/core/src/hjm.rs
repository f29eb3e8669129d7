//! Forward-surface evolution, bond ladders, and the path-wise integral
//! identities behind the discounted-bond dynamics.
//!
//! Stochastic integrals are left-point Euler sums; maturity integrals use
//! the trapezoid rule on the grid, which doubles as the maturity grid.

use crate::coefficients::{integrate_field, sample, HjmCoefficients};
use crate::curve::InitialCurve;
use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::grid::{cumulative_trapezoid, trapezoid, TimeGrid, TriangularField};
use crate::scenario::GPath;

/// `f_{t_k}(T_m)` for `k <= m` along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardSurface {
    grid: TimeGrid,
    values: TriangularField,
}

impl ForwardSurface {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    #[inline]
    pub fn value(&self, k: usize, m: usize) -> f64 {
        self.values.get(k, m)
    }

    pub fn values(&self) -> &TriangularField {
        &self.values
    }

    /// `r_{t_k} = f_{t_k}(t_k)`.
    #[inline]
    pub fn short_rate(&self, k: usize) -> f64 {
        self.values.get(k, k)
    }

    /// `∫_{t_k}^{T_m} f_{t_k}(s) ds` by the trapezoid rule.
    pub fn yield_integral(&self, k: usize, m: usize) -> f64 {
        trapezoid(&self.values.row(k)[..=m - k], self.grid.dt())
    }

    /// `log M_{t_k} = Σ_{j<k} r_j dt`.
    pub fn log_money_market(&self, k: usize) -> f64 {
        let dt = self.grid.dt();
        (0..k).map(|j| self.short_rate(j) * dt).sum()
    }

    /// `log P̃_{t_k}(T_m)`, computed without building the full ladder.
    pub fn log_discounted_bond(&self, k: usize, m: usize) -> f64 {
        -self.yield_integral(k, m) - self.log_money_market(k)
    }
}

/// Evolves `f_t(T)` along `path`:
/// `f[k][m] = f_0(T_m) + Σ_{j<k} (alpha dt + beta ΔB_j + gamma Δ<B>_j)(t_j, T_m)`.
pub fn evolve_surface(coeffs: &HjmCoefficients, curve: &InitialCurve, path: &GPath) -> Result<ForwardSurface> {
    coeffs.require_scalar()?;
    coeffs.grid().ensure_same(&path.grid(), "coefficients vs path")?;
    let grid = path.grid();
    let n = grid.len();
    let dt = grid.dt();
    let mut values = TriangularField::zeros(n);
    for (m, v) in values.row_mut(0).iter_mut().enumerate() {
        *v = curve.value(grid.t(m));
    }
    if let Some((m, v)) = values.row(0).iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidCurve(format!("f_0({}) = {v}", grid.t(m))));
    }
    let (alpha, beta, gamma) = (coeffs.alpha_field(), coeffs.beta_field(0), coeffs.gamma_field(0, 0));
    let mut prev = values.row(0).to_vec();
    for k in 0..n - 1 {
        let (db, dq) = (path.db(k), path.dqv(k));
        let (ar, br, gr) = (&alpha.row(k)[1..], &beta.row(k)[1..], &gamma.row(k)[1..]);
        let next = values.row_mut(k + 1);
        for (j, out) in next.iter_mut().enumerate() {
            *out = prev[j + 1] + ar[j] * dt + br[j] * db + gr[j] * dq;
        }
        if let Some(j) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoefficient {
                field: "forward",
                t: grid.t(k + 1),
                maturity: grid.t(k + 1 + j),
            });
        }
        prev.clear();
        prev.extend_from_slice(next);
    }
    Ok(ForwardSurface { grid, values })
}

/// Short rate, money market, bond prices and discounted bonds on every node.
#[derive(Debug, Clone, PartialEq)]
pub struct BondLadder {
    grid: TimeGrid,
    pub short_rate: Vec<f64>,
    pub money_market: Vec<f64>,
    /// `P_{t_k}(T_m)`.
    pub price: TriangularField,
    /// `P̃_{t_k}(T_m) = P_{t_k}(T_m) / M_{t_k}`.
    pub discounted: TriangularField,
}

impl BondLadder {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }
}

pub fn bond_ladder(surface: &ForwardSurface) -> BondLadder {
    let grid = surface.grid();
    let n = grid.len();
    let dt = grid.dt();
    let short_rate: Vec<f64> = (0..n).map(|k| surface.short_rate(k)).collect();
    let mut money_market = Vec::with_capacity(n);
    let mut log_m = 0.0;
    for k in 0..n {
        if k > 0 {
            log_m += short_rate[k - 1] * dt;
        }
        money_market.push(log_m.exp());
    }
    let mut price = TriangularField::zeros(n);
    let mut discounted = TriangularField::zeros(n);
    for k in 0..n {
        let integrals = cumulative_trapezoid(surface.values.row(k), dt);
        let mk = money_market[k];
        for (j, y) in integrals.iter().enumerate() {
            let p = (-y).exp();
            price.set(k, k + j, p);
            discounted.set(k, k + j, p / mk);
        }
    }
    BondLadder { grid, short_rate, money_market, price, discounted }
}

/// `log P̃_{t_k}(T)` for `k = 0..=m(T)`, computed (direct) from the evolved
/// surface and (lemma) as
/// `log P̃_0(T) - Σ_{j<k} (a dt + b ΔB_j + c Δ<B>_j)(t_j, T)`.
pub fn log_discounted_bond_two_ways(
    coeffs: &HjmCoefficients,
    curve: &InitialCurve,
    path: &GPath,
    maturity: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = path.grid();
    let m = grid.require_node(maturity, "maturity")?;
    let surface = evolve_surface(coeffs, curve, path)?;
    let dt = grid.dt();
    let mut direct = Vec::with_capacity(m + 1);
    let mut log_m = 0.0;
    for k in 0..=m {
        if k > 0 {
            log_m += surface.short_rate(k - 1) * dt;
        }
        direct.push(-surface.yield_integral(k, m) - log_m);
    }
    let mut lemma = Vec::with_capacity(m + 1);
    let mut acc = direct[0];
    lemma.push(acc);
    for j in 0..m {
        acc -= coeffs.a(j, m) * dt + coeffs.b(j, m) * path.db(j) + coeffs.c(j, m) * path.dqv(j);
        lemma.push(acc);
    }
    Ok((direct, lemma))
}

/// The two sides of a numerical identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityPair {
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentityPair {
    pub fn discrepancy(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }

    /// `|lhs - rhs| <= tol * (1 + |lhs|)`.
    pub fn holds_within(&self, tol: f64) -> bool {
        self.discrepancy() <= tol * (1.0 + self.lhs.abs())
    }
}

/// Both orders of integration of `phi(u, s)` over `u in [0, t]`,
/// `s in [t, T]` against `du`, `dB_u` and `d<B>_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FubiniCheck {
    pub time: IdentityPair,
    pub brownian: IdentityPair,
    pub quadratic_variation: IdentityPair,
}

impl FubiniCheck {
    pub fn pairs(&self) -> [(&'static str, IdentityPair); 3] {
        [("ds_du", self.time), ("ds_dB", self.brownian), ("ds_dqv", self.quadratic_variation)]
    }

    pub fn max_relative_discrepancy(&self) -> f64 {
        self.pairs().iter().map(|(_, p)| p.discrepancy() / (1.0 + p.lhs.abs())).fold(0.0, f64::max)
    }
}

/// Discrete Fubini interchange: left-point sums in `u`, trapezoid in `s`.
pub fn fubini_check(phi: &CoefficientField, path: &GPath, t: f64, maturity: f64) -> Result<FubiniCheck> {
    let grid = path.grid();
    let k = grid.require_node(t, "t")?;
    let m = grid.require_node(maturity, "maturity")?;
    if k > m {
        return Err(Error::InvalidArgument(format!("t = {t} exceeds T = {maturity}")));
    }
    let dt = grid.dt();
    let weights: Vec<f64> = (k..=m)
        .map(|s| {
            if m == k {
                0.0
            } else if s == k || s == m {
                0.5 * dt
            } else {
                dt
            }
        })
        .collect();
    let phi_at = |u: usize, s: usize| phi.value(grid.t(u), grid.t(s));
    let increments: [Box<dyn Fn(usize) -> f64 + '_>; 3] =
        [Box::new(|_| dt), Box::new(|j| path.db(j)), Box::new(|j| path.dqv(j))];
    let mut pairs = [IdentityPair { lhs: 0.0, rhs: 0.0 }; 3];
    for (pair, dx) in pairs.iter_mut().zip(&increments) {
        // s outer, u inner
        let lhs: f64 = (k..=m).zip(&weights).map(|(s, w)| w * (0..k).map(|u| phi_at(u, s) * dx(u)).sum::<f64>()).sum();
        // u outer, s inner
        let rhs: f64 = (0..k).map(|u| dx(u) * (k..=m).zip(&weights).map(|(s, w)| w * phi_at(u, s)).sum::<f64>()).sum();
        *pair = IdentityPair { lhs, rhs };
    }
    Ok(FubiniCheck { time: pairs[0], brownian: pairs[1], quadratic_variation: pairs[2] })
}

/// Product rule for the diffusion coefficient:
/// `∫_t^T (beta b + b beta)(t, s) ds` (trapezoid) against `b(t, T)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductRuleCheck {
    pub pair: IdentityPair,
    /// Trapezoid error bound `(T - t) dt^2 max|g''| / 12` for the integrand
    /// `g`, with `g''` from second differences, doubled.
    pub tolerance: f64,
}

impl ProductRuleCheck {
    pub fn passes(&self) -> bool {
        self.pair.discrepancy() <= self.tolerance.max(1e-13 * (1.0 + self.pair.rhs.abs()))
    }
}

pub fn product_rule_check(beta: &CoefficientField, grid: TimeGrid, t: f64, maturity: f64) -> Result<ProductRuleCheck> {
    let k = grid.require_node(t, "t")?;
    let m = grid.require_node(maturity, "maturity")?;
    if k > m {
        return Err(Error::InvalidArgument(format!("t = {t} exceeds T = {maturity}")));
    }
    let sampled = sample(grid, beta);
    let b = integrate_field(grid, beta, &sampled);
    let integrand: Vec<f64> = (k..=m)
        .map(|s| {
            let (bv, bi) = (sampled.get(k, s), b.get(k, s));
            bv * bi + bi * bv
        })
        .collect();
    let dt = grid.dt();
    let lhs = trapezoid(&integrand, dt);
    let rhs = b.get(k, m).powi(2);
    let curvature = integrand.windows(3).map(|w| ((w[2] - 2.0 * w[1] + w[0]) / (dt * dt)).abs()).fold(0.0, f64::max);
    let tolerance = 2.0 * (grid.t(m) - grid.t(k)) * dt * dt * curvature / 12.0;
    Ok(ProductRuleCheck { pair: IdentityPair { lhs, rhs }, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_path, VolatilityBand, VolatilityScenario};

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    fn high_path(g: TimeGrid, sigma: f64, seed: u64) -> GPath {
        let band = VolatilityBand::new(sigma * 0.5, sigma).unwrap();
        generate_path(&VolatilityScenario::constant_high(band), g, seed).unwrap()
    }

    fn ho_lee_like(g: TimeGrid) -> HjmCoefficients {
        HjmCoefficients::from_fields(
            g,
            &CoefficientField::Zero,
            &CoefficientField::ho_lee(),
            &CoefficientField::TimeToMaturity { scale: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn zero_dynamics_keep_curve() {
        let g = grid(20);
        let coeffs = HjmCoefficients::zero(g, 1).unwrap();
        let s = evolve_surface(&coeffs, &InitialCurve::flat(0.02), &high_path(g, 0.2, 1)).unwrap();
        assert!(s.values().values().all(|v| v == 0.02));
    }

    #[test]
    fn ho_lee_surface_matches_closed_form() {
        // f_t(T) = f_0 + B_t + sigma^2 (T t - t^2 / 2) under constant sigma.
        let g = grid(400);
        let sigma = 0.2;
        let path = high_path(g, sigma, 9);
        let s = evolve_surface(&ho_lee_like(g), &InitialCurve::flat(0.02), &path).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..g.len() {
            let t = g.t(k);
            for m in k..g.len() {
                let big_t = g.t(m);
                let exact = 0.02 + path.b_path[k] + sigma * sigma * (big_t * t - 0.5 * t * t);
                worst = worst.max((s.value(k, m) - exact).abs());
            }
        }
        // Left-point error is sigma^2 t dt / 2 at most.
        assert!(worst <= 0.5 * sigma * sigma * g.dt() + 1e-12, "worst {worst}");
    }

    #[test]
    fn flat_bond_price() {
        let g = grid(100);
        let coeffs = HjmCoefficients::zero(g, 1).unwrap();
        let s = evolve_surface(&coeffs, &InitialCurve::flat(0.02), &high_path(g, 0.2, 1)).unwrap();
        let ladder = bond_ladder(&s);
        assert!((ladder.price.get(0, 100) - (-0.02f64).exp()).abs() < 1e-15);
        assert!((ladder.price.get(0, 100) - 0.980_199).abs() < 1e-6);
        assert_eq!(ladder.discounted.get(0, 100), ladder.price.get(0, 100));
    }

    #[test]
    fn zero_surface_ladder_is_unit() {
        let g = grid(10);
        let coeffs = HjmCoefficients::zero(g, 1).unwrap();
        let s = evolve_surface(&coeffs, &InitialCurve::flat(0.0), &high_path(g, 0.2, 1)).unwrap();
        let l = bond_ladder(&s);
        assert!(l.money_market.iter().all(|&m| m == 1.0));
        assert!(l.price.values().all(|p| p == 1.0));
        assert!(l.discounted.values().all(|p| p == 1.0));
    }

    #[test]
    fn pull_to_par_and_positivity() {
        let g = grid(50);
        let path = high_path(g, 0.2, 4);
        let s = evolve_surface(&ho_lee_like(g), &InitialCurve::Linear { intercept: 0.01, slope: 0.02 }, &path).unwrap();
        let l = bond_ladder(&s);
        for k in 0..g.len() {
            assert_eq!(l.price.get(k, k), 1.0);
            assert!(l.money_market[k] > 0.0);
            for m in k..g.len() {
                assert!(l.price.get(k, m) > 0.0);
                let direct = s.log_discounted_bond(k, m);
                assert!((direct - l.discounted.get(k, m).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let coeffs = HjmCoefficients::zero(grid(10), 1).unwrap();
        let err = evolve_surface(&coeffs, &InitialCurve::flat(0.0), &high_path(grid(20), 0.2, 1)).unwrap_err();
        assert!(matches!(err, Error::GridMismatch(_)));
    }

    #[test]
    fn lemma_is_exact_without_dynamics() {
        let g = grid(30);
        let coeffs = HjmCoefficients::zero(g, 1).unwrap();
        let (d, l) =
            log_discounted_bond_two_ways(&coeffs, &InitialCurve::flat(0.03), &high_path(g, 0.2, 2), 1.0).unwrap();
        for (x, y) in d.iter().zip(&l) {
            assert!((x - y).abs() < 1e-15);
            assert!((x - d[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn lemma_error_is_first_order() {
        // Nested paths: the coarse driver is the aggregated fine driver.
        let fine = high_path(grid(400), 1.0, 17);
        let coeffs_for = |g| {
            HjmCoefficients::from_fields(
                g,
                &CoefficientField::Zero,
                &CoefficientField::ho_lee(),
                &CoefficientField::Zero,
            )
            .unwrap()
        };
        let mut errs = Vec::new();
        for factor in [4, 2, 1] {
            let p = fine.coarsen(factor).unwrap();
            let (d, l) =
                log_discounted_bond_two_ways(&coeffs_for(p.grid()), &InitialCurve::flat(0.02), &p, 1.0).unwrap();
            errs.push(d.iter().zip(&l).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.6..2.4).contains(&ratio), "errors {errs:?}");
        }
    }

    #[test]
    fn fubini_orders_agree() {
        let g = grid(60);
        let path = high_path(g, 0.2, 3);
        for phi in [
            CoefficientField::Constant(1.0),
            CoefficientField::hull_white(0.7),
            CoefficientField::TimeToMaturity { scale: 1.0 },
        ] {
            let f = fubini_check(&phi, &path, 0.4, 0.9).unwrap();
            assert!(f.max_relative_discrepancy() <= 1e-12, "{phi:?}: {f:?}");
        }
        let f = fubini_check(&CoefficientField::Constant(1.0), &path, 0.0, 1.0).unwrap();
        assert_eq!(f.brownian.lhs, 0.0);
    }

    #[test]
    fn fubini_constant_field_value() {
        // phi = 1: both orders equal (T - t) * X_t.
        let g = grid(50);
        let path = high_path(g, 0.2, 8);
        let f = fubini_check(&CoefficientField::Constant(1.0), &path, 0.5, 1.0).unwrap();
        assert!((f.brownian.lhs - 0.5 * path.b_path[25]).abs() < 1e-14);
        assert!((f.quadratic_variation.rhs - 0.5 * path.qv_path[25]).abs() < 1e-15);
        assert!((f.time.lhs - 0.25).abs() < 1e-15);
    }

    #[test]
    fn product_rule_values() {
        let g = grid(100);
        let hl = product_rule_check(&CoefficientField::ho_lee(), g, 0.0, 1.0).unwrap();
        assert!((hl.pair.lhs - 1.0).abs() < 1e-14 && (hl.pair.rhs - 1.0).abs() < 1e-15);
        assert!(hl.passes());

        let hw = product_rule_check(&CoefficientField::hull_white(0.5), g, 0.0, 1.0).unwrap();
        assert!((hw.pair.rhs - 0.619_272_487).abs() < 1e-8);
        assert!(hw.passes(), "{hw:?}");

        let z = product_rule_check(&CoefficientField::Zero, g, 0.2, 0.7).unwrap();
        assert_eq!((z.pair.lhs, z.pair.rhs), (0.0, 0.0));
    }
}
