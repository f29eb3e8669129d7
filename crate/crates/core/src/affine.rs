//! Robust Ho-Lee and Hull-White term structures.
//!
//! With `beta = 1` (Ho-Lee) or `beta = exp(-theta (T - t))` (Hull-White) and
//! the drift condition holding with zero market prices, bond prices are
//! affine in the short rate `r` and an uncertain factor `q`:
//!
//! ```text
//! P_t(T) = exp(A(t,T) - B(t,T)^2 q_t / 2 - B(t,T) r_t)
//! A(t,T) = -∫_t^T f_0(s) ds + B(t,T) f_0(t)
//! ```
//!
//! where `q = <B>` (Ho-Lee) or `q_t = ∫_0^t exp(-2 theta (t-u)) d<B>_u`
//! (Hull-White).

use serde::{Deserialize, Serialize};

use crate::coefficients::HjmCoefficients;
use crate::curve::InitialCurve;
use crate::drift::generate_risk_neutral;
use crate::error::{Error, Result};
use crate::field::{decay_integral, CoefficientField};
use crate::grid::{cumulative_trapezoid, TimeGrid};
use crate::hjm::evolve_surface;
use crate::scenario::{generate_path, GPath, ScenarioKind, VolatilityScenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AffineModel {
    HoLee,
    HullWhite { theta: f64 },
}

impl AffineModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            AffineModel::HullWhite { theta } if !(theta.is_finite() && *theta > 0.0) => {
                Err(Error::InvalidArgument(format!("Hull-White theta must be positive, got {theta}")))
            }
            _ => Ok(()),
        }
    }

    /// `B(t, T)`.
    pub fn b(&self, t: f64, maturity: f64) -> f64 {
        match self {
            AffineModel::HoLee => maturity - t,
            AffineModel::HullWhite { theta } => decay_integral(*theta, maturity - t),
        }
    }

    /// The diffusion coefficient `beta(t, T)` that generates the model.
    pub fn beta_field(&self) -> CoefficientField {
        match self {
            AffineModel::HoLee => CoefficientField::ho_lee(),
            AffineModel::HullWhite { theta } => CoefficientField::hull_white(*theta),
        }
    }

    pub fn name(&self) -> String {
        match self {
            AffineModel::HoLee => "ho_lee".into(),
            AffineModel::HullWhite { theta } => format!("hull_white(theta={theta})"),
        }
    }
}

/// A model together with the initial curve it fits and the grid it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTermStructure {
    model: AffineModel,
    curve: InitialCurve,
    grid: TimeGrid,
    /// Trapezoid integrals `∫_0^{t_m} f_0`.
    curve_integral: Vec<f64>,
}

impl AffineTermStructure {
    pub fn new(model: AffineModel, curve: InitialCurve, grid: TimeGrid) -> Result<Self> {
        model.validate()?;
        curve.validate()?;
        let values: Vec<f64> = grid.times().iter().map(|&t| curve.value(t)).collect();
        let curve_integral = cumulative_trapezoid(&values, grid.dt());
        Ok(Self { model, curve, grid, curve_integral })
    }

    pub fn model(&self) -> AffineModel {
        self.model
    }

    pub fn curve(&self) -> &InitialCurve {
        &self.curve
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn b(&self, k: usize, m: usize) -> f64 {
        self.model.b(self.grid.t(k), self.grid.t(m))
    }

    /// `A(t_k, T_m)` with the trapezoid integral of `f_0`.
    pub fn a(&self, k: usize, m: usize) -> f64 {
        -(self.curve_integral[m] - self.curve_integral[k]) + self.b(k, m) * self.curve.value(self.grid.t(k))
    }

    /// Risk-neutral HJM coefficients generating this model.
    pub fn risk_neutral_coefficients(&self) -> Result<HjmCoefficients> {
        generate_risk_neutral(&self.model.beta_field(), self.grid)
    }

    /// Same model and curve on another grid.
    pub fn on_grid(&self, grid: TimeGrid) -> Result<Self> {
        Self::new(self.model, self.curve.clone(), grid)
    }
}

/// Short rate `r` and uncertain factor `q` at every node of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct ShortRateState {
    pub r: Vec<f64>,
    pub q: Vec<f64>,
}

/// Left-point sum `q_k = Σ_{j<k} exp(-2 theta (t_k - t_j)) Δ<B>_j`.
fn hull_white_factor(theta: f64, path: &GPath) -> Vec<f64> {
    let decay = (-2.0 * theta * path.grid().dt()).exp();
    let mut q = Vec::with_capacity(path.qv_path.len());
    q.push(0.0);
    for k in 0..path.grid().n_steps() {
        q.push(decay * (q[k] + path.dqv(k)));
    }
    q
}

/// Euler scheme for the risk-neutral short rate (zero market prices, so
/// the shifted driver coincides with the path's `B`).
pub fn simulate_short_rate(ts: &AffineTermStructure, path: &GPath) -> Result<ShortRateState> {
    ts.grid.ensure_same(&path.grid(), "term structure vs path")?;
    let grid = ts.grid;
    let dt = grid.dt();
    let curve = &ts.curve;
    let q = match ts.model {
        AffineModel::HoLee => path.qv_path.clone(),
        AffineModel::HullWhite { theta } => hull_white_factor(theta, path),
    };
    let mut r = Vec::with_capacity(grid.len());
    r.push(curve.value(0.0));
    for k in 0..grid.n_steps() {
        let t = grid.t(k);
        let drift = match ts.model {
            AffineModel::HoLee => curve.derivative(t, dt) + q[k],
            AffineModel::HullWhite { theta } => curve.derivative(t, dt) + theta * curve.value(t) + q[k] - theta * r[k],
        };
        r.push(r[k] + drift * dt + path.db(k));
    }
    Ok(ShortRateState { r, q })
}

/// `P_{t_k}(T_m)` from the affine formula.
pub fn affine_bond_price(ts: &AffineTermStructure, state: &ShortRateState, k: usize, m: usize) -> Result<f64> {
    if k > m || m >= ts.grid.len() || state.r.len() != ts.grid.len() {
        return Err(Error::InvalidArgument(format!("need t_k <= T_m on the grid, got k={k}, m={m}")));
    }
    let b = ts.b(k, m);
    Ok((ts.a(k, m) - 0.5 * b * b * state.q[k] - b * state.r[k]).exp())
}

/// One row of an affine-versus-HJM price comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceComparison {
    pub t: f64,
    pub maturity: f64,
    pub affine: f64,
    pub hjm: f64,
}

impl PriceComparison {
    pub fn abs_error(&self) -> f64 {
        (self.affine - self.hjm).abs()
    }
}

/// Affine prices and prices from the risk-neutral HJM surface, same path.
pub fn price_comparison(ts: &AffineTermStructure, path: &GPath) -> Result<Vec<PriceComparison>> {
    let state = simulate_short_rate(ts, path)?;
    let surface = evolve_surface(&ts.risk_neutral_coefficients()?, &ts.curve, path)?;
    let grid = ts.grid;
    let mut rows = Vec::with_capacity(grid.len() * (grid.len() + 1) / 2);
    for k in 0..grid.len() {
        for m in k..grid.len() {
            rows.push(PriceComparison {
                t: grid.t(k),
                maturity: grid.t(m),
                affine: affine_bond_price(ts, &state, k, m)?,
                hjm: (-surface.yield_integral(k, m)).exp(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrosscheckRow {
    pub n_steps: usize,
    pub dt: f64,
    pub max_abs_error: f64,
    /// Error of the previous (coarser) level divided by this one.
    pub ratio: Option<f64>,
    /// `max_abs_error / dt`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrosscheckTable {
    pub model: AffineModel,
    pub scenario: String,
    pub rows: Vec<CrosscheckRow>,
}

impl CrosscheckTable {
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.ratio).collect()
    }

    pub fn max_constant(&self) -> f64 {
        self.rows.iter().map(|r| r.constant).fold(0.0, f64::max)
    }
}

/// Maximum affine/HJM price discrepancy per refinement level.
///
/// `path` is the finest path; each entry of `levels` is a step count that
/// divides the path's, and the coarse paths aggregate the same driver.
pub fn affine_vs_hjm_crosscheck(
    model: AffineModel,
    curve: &InitialCurve,
    path: &GPath,
    levels: &[usize],
) -> Result<CrosscheckTable> {
    let fine = path.grid().n_steps();
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();
    let mut rows: Vec<CrosscheckRow> = Vec::with_capacity(sorted.len());
    for n in sorted {
        if n == 0 || fine % n != 0 {
            return Err(Error::InvalidArgument(format!("level {n} does not divide the path's {fine} steps")));
        }
        let p = path.coarsen(fine / n)?;
        let ts = AffineTermStructure::new(model, curve.clone(), p.grid())?;
        let err = price_comparison(&ts, &p)?.iter().map(PriceComparison::abs_error).fold(0.0, f64::max);
        let dt = p.grid().dt();
        let ratio = rows.last().map(|prev| prev.max_abs_error / err);
        rows.push(CrosscheckRow { n_steps: n, dt, max_abs_error: err, ratio, constant: err / dt });
    }
    Ok(CrosscheckTable { model, scenario: path.scenario().label(), rows })
}

/// Residual spread of the Vasicek mean-reversion requirement
/// `f_0'(t) + theta f_0(t) + q_t = mu` across a scenario family.
#[derive(Debug, Clone, PartialEq)]
pub struct VasicekSpreadReport {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `residuals[s][k]` for scenario `s`.
    pub residuals: Vec<Vec<f64>>,
    /// `max - min` over scenarios at each node.
    pub spread: Vec<f64>,
    /// `(sigma_high^2 - sigma_low^2) (1 - exp(-2 theta t)) / (2 theta)`.
    pub analytic_lower_bound: Vec<f64>,
    pub max_spread: f64,
}

impl VasicekSpreadReport {
    /// No spread at grid resolution: a single curve can satisfy every scenario.
    pub fn classical_fit_possible(&self) -> bool {
        self.max_spread <= 1e-12
    }

    pub fn spread_at(&self, t: f64) -> Option<f64> {
        self.times.iter().position(|&x| (x - t).abs() < 1e-12).map(|k| self.spread[k])
    }
}

pub fn vasicek_impossibility(
    theta: f64,
    mu: f64,
    curve: &InitialCurve,
    family: &[VolatilityScenario],
    grid: TimeGrid,
    seed: u64,
) -> Result<VasicekSpreadReport> {
    AffineModel::HullWhite { theta }.validate()?;
    let has = |pred: fn(&ScenarioKind) -> bool| family.iter().any(|s| pred(s.kind()));
    if !has(|k| matches!(k, ScenarioKind::ConstantLow)) || !has(|k| matches!(k, ScenarioKind::ConstantHigh)) {
        return Err(Error::InvalidArgument("family must contain the constant low and high scenarios".into()));
    }
    let band = family[0].band();
    let dt = grid.dt();
    let times = grid.times();
    let mut residuals = Vec::with_capacity(family.len());
    for sc in family {
        let path = generate_path(sc, grid, seed)?;
        let q = hull_white_factor(theta, &path);
        residuals.push(
            times
                .iter()
                .zip(&q)
                .map(|(&t, qk)| curve.derivative(t, dt) + theta * curve.value(t) + qk - mu)
                .collect::<Vec<f64>>(),
        );
    }
    let spread: Vec<f64> = (0..times.len())
        .map(|k| {
            let (lo, hi) =
                residuals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[k]), hi.max(r[k])));
            hi - lo
        })
        .collect();
    let width = band.high().powi(2) - band.low().powi(2);
    let analytic_lower_bound = times.iter().map(|&t| width * decay_integral(2.0 * theta, t)).collect();
    let max_spread = spread.iter().copied().fold(0.0, f64::max);
    Ok(VasicekSpreadReport {
        times,
        labels: family.iter().map(|s| s.label()).collect(),
        residuals,
        spread,
        analytic_lower_bound,
        max_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{scenario_family, VolatilityBand};

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(1.0, n).unwrap()
    }

    fn path(band: VolatilityBand, g: TimeGrid, seed: u64) -> GPath {
        generate_path(&VolatilityScenario::constant_high(band), g, seed).unwrap()
    }

    #[test]
    fn initial_fit_and_pull_to_par() {
        let g = grid(100);
        let band = VolatilityBand::new(0.1, 0.2).unwrap();
        for model in [AffineModel::HoLee, AffineModel::HullWhite { theta: 0.5 }] {
            let ts = AffineTermStructure::new(model, InitialCurve::flat(0.02), g).unwrap();
            let st = simulate_short_rate(&ts, &path(band, g, 3)).unwrap();
            let p = affine_bond_price(&ts, &st, 0, 100).unwrap();
            assert!((p - (-0.02f64).exp()).abs() < 1e-15, "{model:?}: {p}");
            for k in 0..g.len() {
                assert_eq!(affine_bond_price(&ts, &st, k, k).unwrap(), 1.0);
            }
        }
        let hw = AffineModel::HullWhite { theta: 0.5 };
        assert!((hw.b(0.0, 1.0) - 0.786_939).abs() < 1e-6);
    }

    #[test]
    fn initial_fit_tabulated_curve() {
        let g = grid(50);
        let curve = InitialCurve::tabulated(vec![(0.0, 0.01), (0.4, 0.025), (1.0, 0.02)]).unwrap();
        let band = VolatilityBand::new(0.1, 0.2).unwrap();
        for model in [AffineModel::HoLee, AffineModel::HullWhite { theta: 1.5 }] {
            let ts = AffineTermStructure::new(model, curve.clone(), g).unwrap();
            let st = simulate_short_rate(&ts, &path(band, g, 1)).unwrap();
            let values: Vec<f64> = g.times().iter().map(|&t| curve.value(t)).collect();
            for m in 0..g.len() {
                let direct = (-crate::grid::trapezoid(&values[..=m], g.dt())).exp();
                assert!((affine_bond_price(&ts, &st, 0, m).unwrap() - direct).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ho_lee_factor_is_quadratic_variation() {
        let g = grid(64);
        let band = VolatilityBand::new(0.1, 0.3).unwrap();
        let fam = scenario_family(band, g, 6).unwrap();
        let ts = AffineTermStructure::new(AffineModel::HoLee, InitialCurve::flat(0.02), g).unwrap();
        for sc in &fam {
            let p = generate_path(sc, g, 5).unwrap();
            let st = simulate_short_rate(&ts, &p).unwrap();
            assert_eq!(st.q, p.qv_path);
            assert_eq!(st.r[0], 0.02);
        }
    }

    #[test]
    fn hull_white_factor_bounds() {
        let g = grid(100);
        let theta = 0.7;
        let band = VolatilityBand::new(0.1, 0.3).unwrap();
        let ts = AffineTermStructure::new(AffineModel::HullWhite { theta }, InitialCurve::flat(0.02), g).unwrap();
        for sc in scenario_family(band, g, 7).unwrap() {
            let st = simulate_short_rate(&ts, &generate_path(&sc, g, 2).unwrap()).unwrap();
            assert_eq!(st.q[0], 0.0);
            for (k, q) in st.q.iter().enumerate() {
                let cap = band.high().powi(2) * decay_integral(2.0 * theta, g.t(k));
                assert!(*q >= 0.0 && *q <= cap + 1e-15);
            }
        }
    }

    #[test]
    fn zero_volatility_limit() {
        let g = grid(100);
        let band = VolatilityBand::singleton(1e-9).unwrap();
        let ts = AffineTermStructure::new(AffineModel::HoLee, InitialCurve::flat(0.02), g).unwrap();
        let st = simulate_short_rate(&ts, &path(band, g, 4)).unwrap();
        assert!(st.r.iter().all(|r| (r - 0.02).abs() < 1e-8));
        let table =
            affine_vs_hjm_crosscheck(AffineModel::HoLee, &InitialCurve::flat(0.02), &path(band, g, 4), &[100]).unwrap();
        assert!(table.rows[0].max_abs_error < 1e-14);
    }

    #[test]
    fn crosscheck_is_first_order() {
        let band = VolatilityBand::new(0.1, 0.2).unwrap();
        let fine = path(band, grid(400), 8);
        for model in [AffineModel::HoLee, AffineModel::HullWhite { theta: 0.5 }] {
            let t = affine_vs_hjm_crosscheck(model, &InitialCurve::flat(0.02), &fine, &[100, 200, 400]).unwrap();
            for r in t.ratios() {
                assert!((1.7..=2.3).contains(&r), "{model:?}: {t:?}");
            }
        }
    }

    #[test]
    fn vasicek_spread() {
        let g = grid(100);
        let curve = InitialCurve::flat(0.04);
        let fam = scenario_family(VolatilityBand::new(0.1, 0.2).unwrap(), g, 5).unwrap();
        let rep = vasicek_impossibility(0.5, 0.05, &curve, &fam, g, 1).unwrap();
        assert_eq!(rep.spread[0], 0.0);
        let s1 = rep.spread_at(1.0).unwrap();
        assert!(s1 >= 0.018, "{s1}");
        assert!((rep.analytic_lower_bound[100] - 0.018_963_6).abs() < 1e-6);
        assert!(!rep.classical_fit_possible());

        let single = scenario_family(VolatilityBand::singleton(0.15).unwrap(), g, 6).unwrap();
        let rep = vasicek_impossibility(0.5, 0.05, &curve, &single, g, 1).unwrap();
        assert!(rep.max_spread <= 1e-12);
        assert!(rep.classical_fit_possible());

        assert!(vasicek_impossibility(0.5, 0.05, &curve, &fam[2..], g, 1).is_err());
    }
}
