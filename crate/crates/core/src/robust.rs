//! Scenario-family expectations, the discounted-bond martingale test and
//! the exponential-moment bound check.
//!
//! Path `i` of every scenario is driven by stream `i` of the run seed, so
//! scenarios are compared on common random numbers. Per-path values are
//! collected in path order and summed sequentially: results are bit-for-bit
//! reproducible regardless of thread count.

use rayon::prelude::*;

use crate::coefficients::HjmCoefficients;
use crate::curve::InitialCurve;
use crate::drift::{check_drift_condition, DEFAULT_DRIFT_TOLERANCE};
use crate::error::{Error, Result};
use crate::grid::{trapezoid, TimeGrid};
use crate::scenario::{generate_path_stream, GPath, VolatilityScenario};

/// Monte Carlo mean of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEstimate {
    pub label: String,
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
}

/// Per-scenario means with their supremum and infimum over the family.
///
/// `sup` is a lower bound for the sublinear expectation of the payoff and
/// `inf` an upper bound for `-Ê[-payoff]`: the family is a finite subset of
/// the set of beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustEstimate {
    pub scenarios: Vec<ScenarioEstimate>,
    pub sup: f64,
    pub inf: f64,
    pub argsup: usize,
    pub arginf: usize,
}

impl RobustEstimate {
    fn from_scenarios(scenarios: Vec<ScenarioEstimate>) -> Self {
        let mut argsup = 0;
        let mut arginf = 0;
        for (i, s) in scenarios.iter().enumerate() {
            if s.mean > scenarios[argsup].mean {
                argsup = i;
            }
            if s.mean < scenarios[arginf].mean {
                arginf = i;
            }
        }
        let (sup, inf) = (scenarios[argsup].mean, scenarios[arginf].mean);
        Self { scenarios, sup, inf, argsup, arginf }
    }

    /// The estimate over a sub-family, given by scenario indices.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("sub-family must be nonempty".into()));
        }
        let picked = indices
            .iter()
            .map(|&i| {
                self.scenarios
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::InvalidArgument(format!("scenario index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_scenarios(picked))
    }

    pub fn describe(&self) -> String {
        format!(
            "sup={:.6e} ({}) inf={:.6e} ({}) over a family of {} scenarios; sup is a lower bound for the sublinear expectation",
            self.sup,
            self.scenarios[self.argsup].label,
            self.inf,
            self.scenarios[self.arginf].label,
            self.scenarios.len()
        )
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Evaluates `f` on paths `0..paths` of `scenario`, in path order.
fn per_path<T, F>(scenario: &VolatilityScenario, grid: TimeGrid, paths: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &GPath) -> Result<T> + Sync,
{
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let path = generate_path_stream(scenario, grid, seed, i as u64)?;
            f(i, &path)
        })
        .collect()
}

fn check_family(family: &[VolatilityScenario], paths: usize) -> Result<()> {
    if family.is_empty() {
        return Err(Error::InvalidArgument("scenario family is empty".into()));
    }
    if paths < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 paths per scenario, got {paths}")));
    }
    Ok(())
}

/// Monte Carlo approximation of `Ê[payoff]` by the supremum over `family`.
pub fn robust_expect(
    payoff: &(dyn Fn(&GPath) -> f64 + Sync),
    family: &[VolatilityScenario],
    grid: TimeGrid,
    paths: usize,
    seed: u64,
) -> Result<RobustEstimate> {
    check_family(family, paths)?;
    let mut scenarios = Vec::with_capacity(family.len());
    for sc in family {
        let values = per_path(sc, grid, paths, seed, |i, p| {
            let v = payoff(p);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinitePayoff { scenario: sc.label(), path: i })
            }
        })?;
        let (mean, std_error) = mean_and_std_error(&values);
        scenarios.push(ScenarioEstimate { label: sc.label(), mean, std_error, paths });
    }
    Ok(RobustEstimate::from_scenarios(scenarios))
}

/// One scenario at one checkpoint of the martingale test.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleRow {
    pub scenario: String,
    pub t: f64,
    /// Monte Carlo mean of `P̃_t(T)`.
    pub mean: f64,
    pub std_error: f64,
    /// `|mean - P̃_0(T)|`.
    pub deviation: f64,
    /// `deviation / std_error` (infinite when the error is zero and the
    /// deviation is not).
    pub se_ratio: f64,
    /// Discretisation allowance: mean path-wise gap between the Euler
    /// discounted bond and its exact exponential-martingale counterpart.
    pub allowance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    pub maturity: f64,
    pub initial: f64,
    pub dt: f64,
    pub paths: usize,
    pub rows: Vec<MartingaleRow>,
    /// Whether the coefficients were certified risk-neutral before testing.
    pub certified: bool,
}

impl MartingaleReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Largest `allowance / dt`: the constant `c` of the `c dt` allowance.
    pub fn discretization_constant(&self) -> f64 {
        self.rows.iter().map(|r| r.allowance / self.dt).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &MartingaleRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn summary(&self) -> String {
        let worst = self.rows.iter().map(|r| r.se_ratio).fold(0.0, f64::max);
        format!(
            "martingale check T={}: P0={:.10} rows={} failures={} worst deviation/SE={:.3} c={:.4e} certified={} pass={}",
            self.maturity,
            self.initial,
            self.rows.len(),
            self.failures().count(),
            worst,
            self.discretization_constant(),
            self.certified,
            self.pass()
        )
    }
}

/// Discounted bond `P̃_{t_k}(T_m)` at each checkpoint, Euler (direct) and
/// via the log-dynamics (lemma), without building the whole surface.
fn discounted_bond_at(
    coeffs: &HjmCoefficients,
    f0: &[f64],
    path: &GPath,
    m: usize,
    checkpoints: &[usize],
) -> Result<Vec<(f64, f64)>> {
    let dt = path.grid().dt();
    let mut f = f0.to_vec();
    let mut log_mm = 0.0;
    let mut lemma = -trapezoid(&f[..=m], dt);
    let mut out = Vec::with_capacity(checkpoints.len());
    let last = *checkpoints.last().unwrap_or(&0);
    let mut next = 0;
    for k in 0..=last {
        while next < checkpoints.len() && checkpoints[next] == k {
            let direct = -trapezoid(&f[k..=m], dt) - log_mm;
            out.push((direct.exp(), lemma.exp()));
            next += 1;
        }
        if k == last {
            break;
        }
        let (db, dq) = (path.db(k), path.dqv(k));
        log_mm += f[k] * dt;
        lemma -= coeffs.a(k, m) * dt + coeffs.b(k, m) * db + coeffs.c(k, m) * dq;
        for (j, fj) in f.iter_mut().enumerate().take(m + 1).skip(k + 1) {
            *fj += coeffs.alpha(k, j) * dt + coeffs.beta(k, j) * db + coeffs.gamma(k, j) * dq;
        }
    }
    if out.iter().any(|(d, l)| !d.is_finite() || !l.is_finite()) {
        return Err(Error::NonFinitePayoff { scenario: path.scenario().label(), path: 0 });
    }
    Ok(out)
}

/// Tests `E_P[P̃_t(T)] = P̃_0(T)` per scenario and checkpoint: the deviation
/// must be within three standard errors plus the discretisation allowance.
///
/// Refuses coefficients that the drift-condition checker does not certify
/// with zero market prices; the property only holds under that condition.
pub fn martingale_check(
    coeffs: &HjmCoefficients,
    curve: &InitialCurve,
    maturity: f64,
    family: &[VolatilityScenario],
    paths: usize,
    seed: u64,
    checkpoints: &[f64],
) -> Result<MartingaleReport> {
    let (_, drift) = check_drift_condition(coeffs, DEFAULT_DRIFT_TOLERANCE)?;
    let tol = drift.tolerance;
    if !drift.certificate || drift.max_abs_kappa > tol || drift.max_abs_lambda > tol {
        return Err(Error::NotRiskNeutral(drift.summary()));
    }
    let mut report = martingale_check_unverified(coeffs, curve, maturity, family, paths, seed, checkpoints)?;
    report.certified = true;
    Ok(report)
}

/// [`martingale_check`] without the risk-neutrality gate, for exhibiting
/// failures of non-compliant coefficients.
pub fn martingale_check_unverified(
    coeffs: &HjmCoefficients,
    curve: &InitialCurve,
    maturity: f64,
    family: &[VolatilityScenario],
    paths: usize,
    seed: u64,
    checkpoints: &[f64],
) -> Result<MartingaleReport> {
    coeffs.require_scalar()?;
    check_family(family, paths)?;
    let grid = coeffs.grid();
    let m = grid.require_node(maturity, "maturity")?;
    let mut nodes = checkpoints
        .iter()
        .map(|&t| {
            let k = grid.require_node(t, "checkpoint")?;
            if k > m {
                return Err(Error::InvalidArgument(format!("checkpoint {t} lies after the maturity {maturity}")));
            }
            Ok(k)
        })
        .collect::<Result<Vec<_>>>()?;
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("no checkpoints given".into()));
    }
    nodes.sort_unstable();
    nodes.dedup();
    let f0: Vec<f64> = grid.times().iter().map(|&t| curve.value(t)).collect();
    let initial = (-trapezoid(&f0[..=m], grid.dt())).exp();

    let mut rows = Vec::new();
    for sc in family {
        let values = per_path(sc, grid, paths, seed, |i, p| {
            discounted_bond_at(coeffs, &f0, p, m, &nodes)
                .map_err(|_| Error::NonFinitePayoff { scenario: sc.label(), path: i })
        })?;
        for (c, &k) in nodes.iter().enumerate() {
            let direct: Vec<f64> = values.iter().map(|v| v[c].0).collect();
            let gap: Vec<f64> = values.iter().map(|v| (v[c].0 - v[c].1).abs()).collect();
            let (mean, std_error) = mean_and_std_error(&direct);
            let (allowance, _) = mean_and_std_error(&gap);
            let deviation = (mean - initial).abs();
            let se_ratio = if std_error > 0.0 {
                deviation / std_error
            } else if deviation == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            rows.push(MartingaleRow {
                scenario: sc.label(),
                t: grid.t(k),
                mean,
                std_error,
                deviation,
                se_ratio,
                allowance,
                pass: deviation <= 3.0 * std_error + allowance + 1e-14 * initial,
            });
        }
    }
    Ok(MartingaleReport { maturity, initial, dt: grid.dt(), paths, rows, certified: false })
}

/// Exponents of the moment conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NovikovParams {
    pub p: f64,
    pub q: f64,
    pub p_prime: f64,
    pub q_prime: f64,
}

impl Default for NovikovParams {
    /// `p = 2`, `q = 1.5` (so `p* = 12`), `p' = 13`, `q' = 3`.
    fn default() -> Self {
        Self { p: 2.0, q: 1.5, p_prime: 13.0, q_prime: 3.0 }
    }
}

impl NovikovParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.p.is_finite()
            && self.q > 1.0
            && self.q < self.p
            && self.p_prime.is_finite()
            && self.p_prime > 0.0
            && self.q_prime.is_finite()
            && self.q_prime > 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("need 1 < q < p, p' > 0 and q' > 2, got {self:?}")))
        }
    }

    /// `p* = 2pq / (p - q)`.
    pub fn p_star(&self) -> f64 {
        2.0 * self.p * self.q / (self.p - self.q)
    }

    pub fn meets_threshold(&self) -> bool {
        self.p_prime > self.p_star()
    }

    /// Multiplier of the drift exponent, `p'q' / (q' - 2)`.
    pub fn drift_factor(&self) -> f64 {
        self.p_prime * self.q_prime / (self.q_prime - 2.0)
    }

    /// Multiplier of the volatility exponent, `(p'q')^2 / 2`.
    pub fn volatility_factor(&self) -> f64 {
        0.5 * (self.p_prime * self.q_prime).powi(2)
    }
}

/// Monte Carlo estimate and analytic bound of one moment expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBound {
    pub estimate: RobustEstimate,
    pub bound: f64,
}

impl MomentBound {
    pub fn holds(&self) -> bool {
        self.bound.is_finite() && self.estimate.sup <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NovikovReport {
    pub params: NovikovParams,
    pub maturity: f64,
    /// `Ê ∫_0^T exp(p'q'/(q'-2) (∫_0^t a du + ∫_0^t c d<B>)) dt`.
    pub drift_term: MomentBound,
    /// `Ê ∫_0^T exp((p'q')^2/2 ∫_0^t b^2 d<B>) dt`.
    pub volatility_term: MomentBound,
    /// Set when the bounds overflow: the condition cannot be verified this way.
    pub not_verifiable: Option<String>,
}

impl NovikovReport {
    pub fn pass(&self) -> bool {
        self.not_verifiable.is_none() && self.drift_term.holds() && self.volatility_term.holds()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "moment bounds T={} p'={} q'={} p*={} (p'>p*: {}): drift term {:.6e} <= {:.6e}, volatility term {:.6e} <= {:.6e}, pass={}",
            self.maturity,
            self.params.p_prime,
            self.params.q_prime,
            self.params.p_star(),
            self.params.meets_threshold(),
            self.drift_term.estimate.sup,
            self.drift_term.bound,
            self.volatility_term.estimate.sup,
            self.volatility_term.bound,
            self.pass()
        );
        if let Some(note) = &self.not_verifiable {
            s.push_str(&format!(" ({note})"));
        }
        s
    }
}

/// `∫_0^T exp(y_t) dt` for the piecewise-linear interpolation of node
/// values `y`; exact for left-point integrals, whose exponents are linear
/// between nodes.
fn exp_integral(y: &[f64], tau: f64) -> f64 {
    let steps = y.len() - 1;
    let mut acc = 0.0;
    for w in y.windows(2) {
        let d = w[1] - w[0];
        acc += if d == 0.0 { w[0].exp() } else { w[0].exp() * d.exp_m1() / d };
    }
    tau * (acc / steps as f64)
}

/// Estimates both exponential-moment expectations over `family` and
/// compares them with their analytic bounds
/// `T exp(p'q'/(q'-2) T (max a+ + max c+ sigma_high^2))` and
/// `T exp((p'q')^2/2 max b^2 sigma_high^2 T)`.
pub fn novikov_bound_check(
    coeffs: &HjmCoefficients,
    maturity: f64,
    family: &[VolatilityScenario],
    paths: usize,
    seed: u64,
    params: NovikovParams,
) -> Result<NovikovReport> {
    coeffs.require_scalar()?;
    check_family(family, paths)?;
    params.validate()?;
    let grid = coeffs.grid();
    let m = grid.require_node(maturity, "maturity")?;
    if m == 0 {
        return Err(Error::InvalidArgument("maturity must be positive".into()));
    }
    let dt = grid.dt();
    let (k1, k2) = (params.drift_factor(), params.volatility_factor());
    let sigma2 = family.iter().map(|s| s.band().high().powi(2)).fold(0.0, f64::max);

    let (mut a_max, mut c_max, mut b2_max) = (0.0f64, 0.0f64, 0.0f64);
    for j in 0..m {
        a_max = a_max.max(coeffs.a(j, m));
        c_max = c_max.max(coeffs.c(j, m));
        b2_max = b2_max.max(coeffs.b(j, m).powi(2));
    }
    let drift_bound = maturity * (k1 * maturity * (a_max + c_max * sigma2)).exp();
    let vol_bound = maturity * (k2 * b2_max * sigma2 * maturity).exp();

    let mut drift_est = Vec::with_capacity(family.len());
    let mut vol_est = Vec::with_capacity(family.len());
    for sc in family {
        let values = per_path(sc, grid, paths, seed, |i, p| {
            let mut y1 = Vec::with_capacity(m + 1);
            let mut y2 = Vec::with_capacity(m + 1);
            let (mut s1, mut s2) = (0.0, 0.0);
            y1.push(0.0);
            y2.push(0.0);
            for j in 0..m {
                let dq = p.dqv(j);
                s1 += coeffs.a(j, m) * dt + coeffs.c(j, m) * dq;
                s2 += coeffs.b(j, m).powi(2) * dq;
                y1.push(k1 * s1);
                y2.push(k2 * s2);
            }
            let v = (exp_integral(&y1, maturity), exp_integral(&y2, maturity));
            if v.0.is_finite() && v.1.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinitePayoff { scenario: sc.label(), path: i })
            }
        });
        let values = match values {
            Ok(v) => v,
            Err(Error::NonFinitePayoff { .. }) => {
                return Ok(overflow_report(params, maturity, family, paths, drift_bound, vol_bound));
            }
            Err(e) => return Err(e),
        };
        let first: Vec<f64> = values.iter().map(|v| v.0).collect();
        let second: Vec<f64> = values.iter().map(|v| v.1).collect();
        let (mean, std_error) = mean_and_std_error(&first);
        drift_est.push(ScenarioEstimate { label: sc.label(), mean, std_error, paths });
        let (mean, std_error) = mean_and_std_error(&second);
        vol_est.push(ScenarioEstimate { label: sc.label(), mean, std_error, paths });
    }
    let not_verifiable = (!drift_bound.is_finite() || !vol_bound.is_finite())
        .then(|| "condition not verifiable by this method: analytic bound overflows".to_string());
    Ok(NovikovReport {
        params,
        maturity,
        drift_term: MomentBound { estimate: RobustEstimate::from_scenarios(drift_est), bound: drift_bound },
        volatility_term: MomentBound { estimate: RobustEstimate::from_scenarios(vol_est), bound: vol_bound },
        not_verifiable,
    })
}

fn overflow_report(
    params: NovikovParams,
    maturity: f64,
    family: &[VolatilityScenario],
    paths: usize,
    drift_bound: f64,
    vol_bound: f64,
) -> NovikovReport {
    let nan = || {
        RobustEstimate::from_scenarios(
            family
                .iter()
                .map(|s| ScenarioEstimate { label: s.label(), mean: f64::NAN, std_error: f64::NAN, paths })
                .collect(),
        )
    };
    NovikovReport {
        params,
        maturity,
        drift_term: MomentBound { estimate: nan(), bound: drift_bound },
        volatility_term: MomentBound { estimate: nan(), bound: vol_bound },
        not_verifiable: Some("condition not verifiable by this method: exponential moments overflow".into()),
    }
}
