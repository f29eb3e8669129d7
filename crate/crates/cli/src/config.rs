//! Experiment configuration (TOML) and its validation.

use std::path::{Path, PathBuf};

use robust_hjm::affine::AffineModel;
use robust_hjm::robust::NovikovParams;
use robust_hjm::scenario::{scenario_family, BandEdge, FeedbackRule, ScenarioKind};
use robust_hjm::{
    generate_risk_neutral, CoefficientField, HjmCoefficients, InitialCurve, TimeGrid, TriangularField, VolatilityBand,
    VolatilityScenario,
};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    pub grid: GridConfig,
    pub band: BandConfig,
    #[serde(default)]
    pub family: FamilyConfig,
    pub curve: CurveConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub vasicek: VasicekConfig,
}

fn default_paths() -> usize {
    10_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub tau: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub sigma_low: f64,
    pub sigma_high: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Size of the default family (ignored when `scenarios` is given).
    #[serde(default = "default_family_size")]
    pub size: usize,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self { size: default_family_size(), scenarios: Vec::new() }
    }
}

fn default_family_size() -> usize {
    6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    ConstantLow,
    ConstantHigh,
    Constant { level: f64 },
    BangBang { switch_times: Vec<f64>, start: Edge },
    StateFeedback,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Low,
    High,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveConfig {
    Flat { level: f64 },
    Linear { intercept: f64, slope: f64 },
    Tabulated { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    HoLee,
    HullWhite,
    Zero,
    Custom,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub theta: Option<f64>,
    /// Constant added to `alpha` after generation.
    #[serde(default)]
    pub alpha_shift: f64,
    /// CSV with columns `t,T,alpha,beta,gamma` for `kind = "custom"`.
    pub coefficients: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { kind: ModelKind::HoLee, theta: None, alpha_shift: 0.0, coefficients: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_maturity")]
    pub maturity: f64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_refinement")]
    pub refinement: Vec<usize>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_p_prime")]
    pub p_prime: f64,
    #[serde(default = "default_q_prime")]
    pub q_prime: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            maturity: default_maturity(),
            checkpoints: default_checkpoints(),
            tolerance: default_tolerance(),
            refinement: default_refinement(),
            p: default_p(),
            q: default_q(),
            p_prime: default_p_prime(),
            q_prime: default_q_prime(),
        }
    }
}

fn default_maturity() -> f64 {
    1.0
}
fn default_checkpoints() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}
fn default_tolerance() -> f64 {
    robust_hjm::DEFAULT_DRIFT_TOLERANCE
}
fn default_refinement() -> Vec<usize> {
    vec![100, 200, 400]
}
fn default_p() -> f64 {
    2.0
}
fn default_q() -> f64 {
    1.5
}
fn default_p_prime() -> f64 {
    13.0
}
fn default_q_prime() -> f64 {
    3.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VasicekConfig {
    #[serde(default = "default_vasicek_theta")]
    pub theta: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
}

impl Default for VasicekConfig {
    fn default() -> Self {
        Self { theta: default_vasicek_theta(), mu: default_mu() }
    }
}

fn default_vasicek_theta() -> f64 {
    0.5
}
fn default_mu() -> f64 {
    0.05
}

/// A validated configuration turned into library objects.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub seed: u64,
    pub paths: usize,
    pub grid: TimeGrid,
    pub family: Vec<VolatilityScenario>,
    pub curve: InitialCurve,
    pub model: ModelConfig,
    pub check: CheckConfig,
    pub vasicek: VasicekConfig,
    base_dir: PathBuf,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn finite(field: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(field_err(field, format!("must be finite, got {x}")))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Validates every field; diagnostics name the offending field.
    pub fn into_experiment(self, base_dir: &Path) -> Result<Experiment, CliError> {
        if !(self.grid.tau.is_finite() && self.grid.tau > 0.0) {
            return Err(field_err("grid.tau", format!("must be positive, got {}", self.grid.tau)));
        }
        if self.grid.steps == 0 {
            return Err(field_err("grid.steps", "must be at least 1"));
        }
        let grid = TimeGrid::new(self.grid.tau, self.grid.steps).map_err(|e| field_err("grid", e))?;

        let (lo, hi) = (self.band.sigma_low, self.band.sigma_high);
        if !(lo.is_finite() && lo > 0.0) {
            return Err(field_err("band.sigma_low", format!("must be positive, got {lo}")));
        }
        if !(hi.is_finite() && hi >= lo) {
            return Err(field_err("band.sigma_high", format!("must be finite and >= sigma_low = {lo}, got {hi}")));
        }
        let band = VolatilityBand::new(lo, hi).map_err(|e| field_err("band", e))?;

        if self.paths < 2 {
            return Err(field_err("paths", format!("must be at least 2, got {}", self.paths)));
        }

        let family = if self.family.scenarios.is_empty() {
            if self.family.size < 2 {
                return Err(field_err("family.size", format!("must be at least 2, got {}", self.family.size)));
            }
            scenario_family(band, grid, self.family.size).map_err(|e| field_err("family.size", e))?
        } else {
            self.family
                .scenarios
                .iter()
                .enumerate()
                .map(|(i, s)| scenario(band, grid, s).map_err(|e| field_err(&format!("family.scenarios[{i}]"), e)))
                .collect::<Result<Vec<_>, _>>()?
        };

        let curve = match &self.curve {
            CurveConfig::Flat { level } => InitialCurve::flat(finite("curve.level", *level)?),
            CurveConfig::Linear { intercept, slope } => InitialCurve::Linear {
                intercept: finite("curve.intercept", *intercept)?,
                slope: finite("curve.slope", *slope)?,
            },
            CurveConfig::Tabulated { points } => {
                InitialCurve::tabulated(points.clone()).map_err(|e| field_err("curve.points", e))?
            }
        };

        let model = self.model;
        finite("model.alpha_shift", model.alpha_shift)?;
        match model.kind {
            ModelKind::HullWhite => match model.theta {
                Some(t) if t.is_finite() && t > 0.0 => {}
                Some(t) => return Err(field_err("model.theta", format!("must be positive, got {t}"))),
                None => return Err(field_err("model.theta", "required for hull_white")),
            },
            ModelKind::Custom if model.coefficients.is_none() => {
                return Err(field_err("model.coefficients", "required for custom"));
            }
            _ => {}
        }

        let check = self.check;
        let maturity = finite("check.maturity", check.maturity)?;
        if grid.node_of(maturity).is_none() || maturity <= 0.0 {
            return Err(field_err("check.maturity", format!("{maturity} is not a positive grid node")));
        }
        for (i, &t) in check.checkpoints.iter().enumerate() {
            if grid.node_of(t).is_none() || t > maturity + 1e-12 {
                return Err(field_err(
                    &format!("check.checkpoints[{i}]"),
                    format!("{t} is not a grid node in [0, maturity]"),
                ));
            }
        }
        if check.checkpoints.is_empty() {
            return Err(field_err("check.checkpoints", "must not be empty"));
        }
        if !(check.tolerance.is_finite() && check.tolerance >= 0.0) {
            return Err(field_err("check.tolerance", format!("must be non-negative, got {}", check.tolerance)));
        }
        for (i, &n) in check.refinement.iter().enumerate() {
            if n == 0 {
                return Err(field_err(&format!("check.refinement[{i}]"), "must be positive"));
            }
        }
        let params = NovikovParams { p: check.p, q: check.q, p_prime: check.p_prime, q_prime: check.q_prime };
        params.validate().map_err(|e| field_err("check.p/q/p_prime/q_prime", e))?;

        let vasicek = self.vasicek;
        if !(vasicek.theta.is_finite() && vasicek.theta > 0.0) {
            return Err(field_err("vasicek.theta", format!("must be positive, got {}", vasicek.theta)));
        }
        finite("vasicek.mu", vasicek.mu)?;

        Ok(Experiment {
            seed: self.seed,
            paths: self.paths,
            grid,
            family,
            curve,
            model,
            check,
            vasicek,
            base_dir: base_dir.to_path_buf(),
        })
    }
}

fn scenario(band: VolatilityBand, grid: TimeGrid, cfg: &ScenarioConfig) -> robust_hjm::Result<VolatilityScenario> {
    let kind = match cfg {
        ScenarioConfig::ConstantLow => ScenarioKind::ConstantLow,
        ScenarioConfig::ConstantHigh => ScenarioKind::ConstantHigh,
        ScenarioConfig::Constant { level } => ScenarioKind::ConstantMid(*level),
        ScenarioConfig::BangBang { switch_times, start } => {
            for &s in switch_times {
                grid.require_node(s, "switch time")?;
            }
            let start = match start {
                Edge::Low => BandEdge::Low,
                Edge::High => BandEdge::High,
            };
            ScenarioKind::BangBang { switch_times: switch_times.clone(), start }
        }
        ScenarioConfig::StateFeedback => ScenarioKind::StateFeedback(FeedbackRule::HighWhenNonNegative),
    };
    VolatilityScenario::new(band, kind)
}

impl Experiment {
    pub fn novikov_params(&self) -> NovikovParams {
        NovikovParams { p: self.check.p, q: self.check.q, p_prime: self.check.p_prime, q_prime: self.check.q_prime }
    }

    /// The affine model, if the configured model is one.
    pub fn affine_model(&self) -> Option<AffineModel> {
        match self.model.kind {
            ModelKind::HoLee => Some(AffineModel::HoLee),
            ModelKind::HullWhite => Some(AffineModel::HullWhite { theta: self.model.theta? }),
            _ => None,
        }
    }

    pub fn beta_field(&self) -> Option<CoefficientField> {
        self.affine_model().map(|m| m.beta_field())
    }

    /// Coefficients on `grid`: risk-neutral for the built-in models, read
    /// from CSV for custom ones, then shifted by `alpha_shift`.
    pub fn coefficients_on(&self, grid: TimeGrid) -> Result<HjmCoefficients, CliError> {
        let base = match self.model.kind {
            ModelKind::HoLee | ModelKind::HullWhite => {
                generate_risk_neutral(&self.beta_field().expect("affine model"), grid)?
            }
            ModelKind::Zero => HjmCoefficients::zero(grid, 1)?,
            ModelKind::Custom => {
                let rel = self.model.coefficients.as_ref().expect("validated");
                let path = if rel.is_absolute() { rel.clone() } else { self.base_dir.join(rel) };
                read_coefficients(&path, grid)?
            }
        };
        if self.model.alpha_shift != 0.0 {
            Ok(base.with_alpha_shift(&CoefficientField::Constant(self.model.alpha_shift))?)
        } else {
            Ok(base)
        }
    }

    pub fn coefficients(&self) -> Result<HjmCoefficients, CliError> {
        self.coefficients_on(self.grid)
    }
}

#[derive(Debug, Deserialize)]
struct CoefficientRow {
    t: f64,
    #[serde(rename = "T")]
    maturity: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
}

/// Reads `t,T,alpha,beta,gamma` rows covering every grid pair `t <= T`.
pub fn read_coefficients(path: &Path, grid: TimeGrid) -> Result<HjmCoefficients, CliError> {
    let field = "model.coefficients";
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| field_err(field, format!("{}: {e}", path.display())))?;
    let n = grid.len();
    let mut alpha = TriangularField::zeros(n);
    let mut beta = TriangularField::zeros(n);
    let mut gamma = TriangularField::zeros(n);
    let mut seen = TriangularField::zeros(n);
    for (line, rec) in reader.deserialize::<CoefficientRow>().enumerate() {
        let r = rec.map_err(|e| field_err(field, format!("{}: {e}", path.display())))?;
        let (k, m) = match (grid.node_of(r.t), grid.node_of(r.maturity)) {
            (Some(k), Some(m)) if k <= m => (k, m),
            _ => {
                return Err(field_err(
                    field,
                    format!("row {}: (t={}, T={}) is not a grid pair with t <= T", line + 1, r.t, r.maturity),
                ))
            }
        };
        alpha.set(k, m, r.alpha);
        beta.set(k, m, r.beta);
        gamma.set(k, m, r.gamma);
        seen.set(k, m, 1.0);
    }
    if let Some(k) = (0..n).find(|&k| seen.row(k).contains(&0.0)) {
        let m = k + seen.row(k).iter().position(|&s| s == 0.0).unwrap_or(0);
        return Err(field_err(field, format!("missing row for t={}, T={}", grid.t(k), grid.t(m))));
    }
    HjmCoefficients::from_grid(grid, alpha, vec![beta], vec![gamma]).map_err(|e| field_err(field, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        seed = 7
        [grid]
        tau = 1.0
        steps = 20
        [band]
        sigma_low = 0.1
        sigma_high = 0.2
        [curve]
        kind = "flat"
        level = 0.02
    "#;

    fn parse(extra: &str) -> Result<Experiment, CliError> {
        let cfg: ExperimentConfig =
            toml::from_str(&format!("{BASE}\n{extra}")).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.into_experiment(Path::new("."))
    }

    #[test]
    fn defaults() {
        let e = parse("").unwrap();
        assert_eq!(e.family.len(), 6);
        assert_eq!(e.paths, 10_000);
        assert_eq!(e.affine_model(), Some(AffineModel::HoLee));
        assert_eq!(e.novikov_params(), NovikovParams::default());
    }

    #[test]
    fn diagnostics_name_fields() {
        let cases = [
            ("[model]\nkind = \"hull_white\"", "model.theta"),
            ("[check]\nmaturity = 0.333", "check.maturity"),
            ("[check]\ncheckpoints = [0.5, 2.0]", "check.checkpoints[1]"),
            ("[model]\nkind = \"custom\"", "model.coefficients"),
            ("[family]\nsize = 1", "family.size"),
            ("[vasicek]\ntheta = -1.0", "vasicek.theta"),
        ];
        for (extra, field) in cases {
            let msg = parse(extra).unwrap_err().to_string();
            assert!(msg.contains(field), "{extra}: {msg}");
        }
        let bad: ExperimentConfig = toml::from_str(&BASE.replace("sigma_high = 0.2", "sigma_high = 0.05")).unwrap();
        assert!(bad.into_experiment(Path::new(".")).unwrap_err().to_string().contains("band.sigma_high"));
    }

    #[test]
    fn explicit_scenarios() {
        let e = parse(
            "[family]\nscenarios = [{ kind = \"constant_low\" }, { kind = \"bang_bang\", switch_times = [0.5], start = \"high\" }, { kind = \"state_feedback\" }]",
        )
        .unwrap();
        assert_eq!(e.family.len(), 3);
        let err = parse("[family]\nscenarios = [{ kind = \"constant\", level = 0.5 }]").unwrap_err();
        assert!(err.to_string().contains("family.scenarios[0]"));
    }

    #[test]
    fn custom_coefficients_round_trip() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let mut text = String::from("t,T,alpha,beta,gamma\n");
        for k in 0..5 {
            for m in k..5 {
                let (t, s) = (grid.t(k), grid.t(m));
                text.push_str(&format!("{t},{s},0,1,{}\n", s - t));
            }
        }
        std::fs::write(&path, &text).unwrap();
        let c = read_coefficients(&path, grid).unwrap();
        assert!((c.b(0, 4) - 1.0).abs() < 1e-15);
        let (_, rep) = robust_hjm::check_drift_condition(&c, 1e-12).unwrap();
        assert!(rep.certificate);

        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, truncated).unwrap();
        assert!(read_coefficients(&path, grid).unwrap_err().to_string().contains("missing row"));
    }
}
