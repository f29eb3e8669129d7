//! Volatility scenarios and G-Brownian paths.
//!
//! A G-Brownian motion with volatility band `[sigma_low, sigma_high]` is
//! represented, scenario by scenario, as a classical Brownian motion `W`
//! modulated by an adapted volatility: `B_t = ∫ sigma_u dW_u`. Volatility is
//! piecewise constant on the grid, so `<B>` increments are exact.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// The state space `[sigma_low, sigma_high]` of the uncertain volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilityBand {
    sigma_low: f64,
    sigma_high: f64,
}

impl VolatilityBand {
    pub fn new(sigma_low: f64, sigma_high: f64) -> Result<Self> {
        if !(sigma_low.is_finite() && sigma_high.is_finite() && sigma_low > 0.0 && sigma_low <= sigma_high) {
            return Err(Error::InvalidBand { low: sigma_low, high: sigma_high });
        }
        Ok(Self { sigma_low, sigma_high })
    }

    pub fn singleton(sigma: f64) -> Result<Self> {
        Self::new(sigma, sigma)
    }

    pub fn low(&self) -> f64 {
        self.sigma_low
    }

    pub fn high(&self) -> f64 {
        self.sigma_high
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.sigma_low + self.sigma_high)
    }

    pub fn is_singleton(&self) -> bool {
        self.sigma_low == self.sigma_high
    }

    pub fn contains(&self, sigma: f64) -> bool {
        sigma >= self.sigma_low && sigma <= self.sigma_high
    }

    fn edge(&self, edge: BandEdge) -> f64 {
        match edge {
            BandEdge::Low => self.sigma_low,
            BandEdge::High => self.sigma_high,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandEdge {
    Low,
    High,
}

impl BandEdge {
    fn flip(self) -> Self {
        match self {
            BandEdge::Low => BandEdge::High,
            BandEdge::High => BandEdge::Low,
        }
    }
}

/// Path-dependent volatility rules. Evaluated at the left node of each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackRule {
    /// `sigma_high` while `B_t >= 0`, `sigma_low` otherwise.
    HighWhenNonNegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScenarioKind {
    ConstantLow,
    ConstantHigh,
    ConstantMid(f64),
    /// Alternates between the band edges, starting at `start`, flipping at
    /// each switch time.
    BangBang {
        switch_times: Vec<f64>,
        start: BandEdge,
    },
    StateFeedback(FeedbackRule),
}

/// One adapted volatility path through a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityScenario {
    band: VolatilityBand,
    kind: ScenarioKind,
}

impl VolatilityScenario {
    pub fn new(band: VolatilityBand, kind: ScenarioKind) -> Result<Self> {
        match &kind {
            ScenarioKind::ConstantMid(level) if !band.contains(*level) => {
                return Err(Error::LevelOutsideBand { level: *level, low: band.low(), high: band.high() })
            }
            ScenarioKind::BangBang { switch_times, .. } => {
                if switch_times.iter().any(|s| !s.is_finite()) || switch_times.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::InvalidArgument("bang-bang switch times must be finite and sorted".into()));
                }
            }
            _ => {}
        }
        Ok(Self { band, kind })
    }

    pub fn constant_low(band: VolatilityBand) -> Self {
        Self { band, kind: ScenarioKind::ConstantLow }
    }

    pub fn constant_high(band: VolatilityBand) -> Self {
        Self { band, kind: ScenarioKind::ConstantHigh }
    }

    pub fn band(&self) -> VolatilityBand {
        self.band
    }

    pub fn kind(&self) -> &ScenarioKind {
        &self.kind
    }

    /// True when the realised volatility does not depend on the driver.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self.kind, ScenarioKind::StateFeedback(_))
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ScenarioKind::ConstantLow => format!("constant_low({})", self.band.low()),
            ScenarioKind::ConstantHigh => format!("constant_high({})", self.band.high()),
            ScenarioKind::ConstantMid(l) => format!("constant_mid({l})"),
            ScenarioKind::BangBang { switch_times, start } => {
                let times: Vec<String> = switch_times.iter().map(|t| t.to_string()).collect();
                let start = match start {
                    BandEdge::Low => "low",
                    BandEdge::High => "high",
                };
                format!("bang_bang(start={start}; switches={})", times.join("|"))
            }
            ScenarioKind::StateFeedback(FeedbackRule::HighWhenNonNegative) => {
                "state_feedback(high_when_b_nonnegative)".to_string()
            }
        }
    }

    /// Volatility on step `[t_k, t_{k+1})` given the path value `B_{t_k}`.
    fn sigma(&self, t_k: f64, dt: f64, b_k: f64) -> f64 {
        match &self.kind {
            ScenarioKind::ConstantLow => self.band.low(),
            ScenarioKind::ConstantHigh => self.band.high(),
            ScenarioKind::ConstantMid(level) => *level,
            ScenarioKind::BangBang { switch_times, start } => {
                let flips = switch_times.iter().filter(|&&s| t_k >= s - 1e-9 * dt).count();
                let edge = if flips % 2 == 0 { *start } else { start.flip() };
                self.band.edge(edge)
            }
            ScenarioKind::StateFeedback(FeedbackRule::HighWhenNonNegative) => {
                if b_k >= 0.0 {
                    self.band.high()
                } else {
                    self.band.low()
                }
            }
        }
    }
}

/// One simulated trajectory of the G-Brownian motion under a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GPath {
    grid: TimeGrid,
    scenario: VolatilityScenario,
    /// Standard normal draws scaled by `sqrt(dt)`; one per step.
    pub w_increments: Vec<f64>,
    /// Realised volatility on each step.
    pub sigma_real: Vec<f64>,
    /// `B` at every node; `b_path[0] == 0`.
    pub b_path: Vec<f64>,
    /// `<B>` at every node; `qv_path[0] == 0`.
    pub qv_path: Vec<f64>,
}

impl GPath {
    /// Builds the path driven by the given driver increments.
    pub fn from_increments(scenario: &VolatilityScenario, grid: TimeGrid, w_increments: Vec<f64>) -> Result<Self> {
        let n = grid.n_steps();
        if w_increments.len() != n {
            return Err(Error::GridMismatch(format!(
                "{} driver increments for a grid with {n} steps",
                w_increments.len()
            )));
        }
        let dt = grid.dt();
        let mut sigma_real = Vec::with_capacity(n);
        let mut b_path = Vec::with_capacity(n + 1);
        let mut qv_path = Vec::with_capacity(n + 1);
        b_path.push(0.0);
        qv_path.push(0.0);
        for (k, dw) in w_increments.iter().enumerate() {
            let s = scenario.sigma(grid.t(k), dt, b_path[k]);
            sigma_real.push(s);
            b_path.push(b_path[k] + s * dw);
            qv_path.push(qv_path[k] + s * s * dt);
        }
        Ok(Self { grid, scenario: scenario.clone(), w_increments, sigma_real, b_path, qv_path })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn scenario(&self) -> &VolatilityScenario {
        &self.scenario
    }

    /// `B_{t_{k+1}} - B_{t_k}`.
    #[inline]
    pub fn db(&self, k: usize) -> f64 {
        self.b_path[k + 1] - self.b_path[k]
    }

    /// `<B>_{t_{k+1}} - <B>_{t_k}`.
    #[inline]
    pub fn dqv(&self, k: usize) -> f64 {
        self.qv_path[k + 1] - self.qv_path[k]
    }

    /// The same driver aggregated onto a grid with `n_steps / factor` steps,
    /// with the scenario re-evaluated on the coarse grid.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let coarse = self.grid.coarsen(factor)?;
        let w: Vec<f64> = self.w_increments.chunks(factor).map(|c| c.iter().sum()).collect();
        Self::from_increments(&self.scenario, coarse, w)
    }
}

/// Driver increments for stream `stream` of `seed`.
///
/// Uses ChaCha8 with the stream word set to `stream`: every (seed, stream)
/// pair is an independent, reproducible sequence regardless of the order in
/// which paths are generated.
pub fn driver_increments(grid: TimeGrid, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let sq = grid.dt().sqrt();
    (0..grid.n_steps())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * sq
        })
        .collect()
}

/// Path for `(scenario, grid, seed)`; identical inputs give identical paths.
pub fn generate_path(scenario: &VolatilityScenario, grid: TimeGrid, seed: u64) -> Result<GPath> {
    generate_path_stream(scenario, grid, seed, 0)
}

/// Path number `stream` of a Monte Carlo run with base `seed`.
pub fn generate_path_stream(scenario: &VolatilityScenario, grid: TimeGrid, seed: u64, stream: u64) -> Result<GPath> {
    GPath::from_increments(scenario, grid, driver_increments(grid, seed, stream))
}

/// A finite family approximating the set of beliefs.
///
/// Members in order: constant low, constant high, the band midpoint, a
/// low-to-high and a high-to-low switch at the grid node nearest `tau/2`,
/// the `B >= 0` feedback rule, then bang-bang paths with 2, 3, ... evenly
/// spaced switches and alternating start edges. Suprema over this family
/// are lower bounds for the sublinear expectation.
pub fn scenario_family(band: VolatilityBand, grid: TimeGrid, family_size: usize) -> Result<Vec<VolatilityScenario>> {
    if family_size < 2 {
        return Err(Error::InvalidArgument(format!("family_size must be at least 2, got {family_size}")));
    }
    let snap = |t: f64| grid.t((t / grid.dt()).round() as usize);
    let half = snap(0.5 * grid.tau());
    let mut out = vec![VolatilityScenario::constant_low(band), VolatilityScenario::constant_high(band)];
    let mut extra = 0usize;
    while out.len() < family_size {
        let kind = match out.len() {
            2 => ScenarioKind::ConstantMid(band.mid()),
            3 => ScenarioKind::BangBang { switch_times: vec![half], start: BandEdge::Low },
            4 => ScenarioKind::BangBang { switch_times: vec![half], start: BandEdge::High },
            5 => ScenarioKind::StateFeedback(FeedbackRule::HighWhenNonNegative),
            _ => {
                let switches = extra + 2;
                extra += 1;
                let times = (1..=switches).map(|i| snap(grid.tau() * i as f64 / (switches + 1) as f64)).collect();
                let start = if switches % 2 == 0 { BandEdge::Low } else { BandEdge::High };
                ScenarioKind::BangBang { switch_times: times, start }
            }
        };
        out.push(VolatilityScenario::new(band, kind)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn band(lo: f64, hi: f64) -> VolatilityBand {
        VolatilityBand::new(lo, hi).unwrap()
    }

    #[test]
    fn band_validation() {
        assert!(VolatilityBand::new(0.2, 0.1).is_err());
        assert!(VolatilityBand::new(0.0, 0.1).is_err());
        assert!(VolatilityBand::new(0.1, f64::INFINITY).is_err());
        assert!(VolatilityBand::new(0.1, 0.1).unwrap().is_singleton());
    }

    #[test]
    fn mid_level_outside_band_is_rejected() {
        let err = VolatilityScenario::new(band(0.1, 0.2), ScenarioKind::ConstantMid(0.3)).unwrap_err();
        assert!(matches!(err, Error::LevelOutsideBand { .. }));
    }

    #[test]
    fn constant_high_quadratic_variation() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let p = generate_path(&VolatilityScenario::constant_high(band(0.1, 0.2)), grid, 7).unwrap();
        assert!((p.qv_path[100] - 0.04).abs() < 1e-15);
        assert_eq!(p.b_path[0], 0.0);
        assert_eq!(p.qv_path[0], 0.0);
    }

    #[test]
    fn bang_bang_quadratic_variation() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let sc = VolatilityScenario::new(
            band(0.1, 0.2),
            ScenarioKind::BangBang { switch_times: vec![0.5], start: BandEdge::Low },
        )
        .unwrap();
        let p = generate_path(&sc, grid, 1).unwrap();
        assert!((p.qv_path[100] - 0.025).abs() < 1e-15);
        assert_eq!(p.sigma_real[49], 0.1);
        assert_eq!(p.sigma_real[50], 0.2);
    }

    #[test]
    fn family_construction() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let fam = scenario_family(band(0.1, 0.2), grid, 2).unwrap();
        assert_eq!(fam.len(), 2);
        assert_eq!(fam[0].kind(), &ScenarioKind::ConstantLow);
        assert_eq!(fam[1].kind(), &ScenarioKind::ConstantHigh);

        let fam = scenario_family(band(0.1, 0.2), grid, 5).unwrap();
        assert!(matches!(fam[2].kind(), ScenarioKind::ConstantMid(l) if (*l - 0.15).abs() < 1e-15));
        assert!(matches!(fam[3].kind(), ScenarioKind::BangBang { .. }));
        assert!(matches!(fam[4].kind(), ScenarioKind::BangBang { .. }));

        let fam = scenario_family(band(0.1, 0.2), grid, 9).unwrap();
        assert_eq!(fam.len(), 9);
        assert!(matches!(fam[5].kind(), ScenarioKind::StateFeedback(_)));

        assert!(scenario_family(band(0.1, 0.2), grid, 1).is_err());
    }

    #[test]
    fn singleton_family_realises_one_level() {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        for sc in scenario_family(band(0.15, 0.15), grid, 8).unwrap() {
            let p = generate_path(&sc, grid, 3).unwrap();
            assert!(p.sigma_real.iter().all(|&s| s == 0.15), "{}", sc.label());
        }
    }

    #[test]
    fn feedback_is_adapted() {
        let grid = TimeGrid::new(1.0, 64).unwrap();
        let sc =
            VolatilityScenario::new(band(0.1, 0.3), ScenarioKind::StateFeedback(FeedbackRule::HighWhenNonNegative))
                .unwrap();
        let w = driver_increments(grid, 11, 0);
        let base = GPath::from_increments(&sc, grid, w.clone()).unwrap();
        for k in [0, 10, 33, 63] {
            let mut w2 = w.clone();
            for x in w2.iter_mut().skip(k) {
                *x = -*x * 3.0 + 0.1;
            }
            let other = GPath::from_increments(&sc, grid, w2).unwrap();
            assert_eq!(&base.sigma_real[..=k], &other.sigma_real[..=k]);
        }
    }

    #[test]
    fn coarsening_preserves_driver_sums() {
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let p = generate_path(&VolatilityScenario::constant_low(band(0.1, 0.2)), grid, 5).unwrap();
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.grid().n_steps(), 10);
        for k in 0..=10 {
            assert!((c.b_path[k] - p.b_path[4 * k]).abs() < 1e-14);
            assert!((c.qv_path[k] - p.qv_path[4 * k]).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn qv_stays_in_band(lo in 0.01f64..0.5, width in 0.0f64..0.5, n in 1usize..120, seed in any::<u64>(), which in 0usize..7) {
            let b = band(lo, lo + width);
            let grid = TimeGrid::new(1.5, n).unwrap();
            let fam = scenario_family(b, grid, 7).unwrap();
            let p = generate_path(&fam[which], grid, seed).unwrap();
            for k in 0..=n {
                let t = grid.t(k);
                let slack = 1e-12 * (1.0 + t);
                prop_assert!(p.qv_path[k] >= b.low() * b.low() * t - slack);
                prop_assert!(p.qv_path[k] <= b.high() * b.high() * t + slack);
                if k > 0 {
                    prop_assert!(p.qv_path[k] >= p.qv_path[k - 1]);
                    let db = p.b_path[k] - p.b_path[k - 1];
                    prop_assert!((db - p.sigma_real[k - 1] * p.w_increments[k - 1]).abs() <= 1e-15 * (1.0 + db.abs()));
                }
            }
        }

        #[test]
        fn generation_is_deterministic(seed in any::<u64>(), which in 0usize..6) {
            let grid = TimeGrid::new(1.0, 32).unwrap();
            let fam = scenario_family(band(0.1, 0.2), grid, 6).unwrap();
            let a = generate_path(&fam[which], grid, seed).unwrap();
            let b = generate_path(&fam[which], grid, seed).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn singleton_qv_is_linear(s in 0.01f64..1.0, n in 1usize..200) {
            let grid = TimeGrid::new(1.0, n).unwrap();
            let b = VolatilityBand::singleton(s).unwrap();
            let p = generate_path(&VolatilityScenario::constant_high(b), grid, 0).unwrap();
            for k in 0..=n {
                prop_assert!((p.qv_path[k] - s * s * grid.t(k)).abs() <= 1e-14 * (1.0 + s * s));
            }
        }
    }
}
