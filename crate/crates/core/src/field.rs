//! Deterministic coefficient fields `phi(t, T)` with optional closed-form
//! maturity integrals `∫_t^T phi(t, s) ds`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CoefficientField {
    Zero,
    Constant(f64),
    /// `intercept + slope * T`.
    MaturityLinear {
        intercept: f64,
        slope: f64,
    },
    /// `scale * (T - t)`.
    TimeToMaturity {
        scale: f64,
    },
    /// `scale * exp(-theta (T - t))`.
    Exponential {
        scale: f64,
        theta: f64,
    },
    /// `exp(-theta x) (1 - exp(-theta x)) / theta` with `x = T - t`: the
    /// risk-neutral uncertain drift of the Hull-White volatility.
    HullWhiteDrift {
        theta: f64,
    },
    Sum(Vec<CoefficientField>),
}

impl CoefficientField {
    /// Ho-Lee volatility, `beta = 1`.
    pub fn ho_lee() -> Self {
        Self::Constant(1.0)
    }

    /// Hull-White volatility, `beta = exp(-theta (T - t))`.
    pub fn hull_white(theta: f64) -> Self {
        Self::Exponential { scale: 1.0, theta }
    }

    pub fn plus(self, other: CoefficientField) -> Self {
        match self {
            Self::Sum(mut v) => {
                v.push(other);
                Self::Sum(v)
            }
            s => Self::Sum(vec![s, other]),
        }
    }

    pub fn value(&self, t: f64, maturity: f64) -> f64 {
        let x = maturity - t;
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::MaturityLinear { intercept, slope } => intercept + slope * maturity,
            Self::TimeToMaturity { scale } => scale * x,
            Self::Exponential { scale, theta } => scale * (-theta * x).exp(),
            Self::HullWhiteDrift { theta } => {
                let e = (-theta * x).exp();
                e * decay_integral(*theta, x)
            }
            Self::Sum(v) => v.iter().map(|f| f.value(t, maturity)).sum(),
        }
    }

    /// `∫_t^T phi(t, s) ds` in closed form, when one is known.
    pub fn integral(&self, t: f64, maturity: f64) -> Option<f64> {
        let x = maturity - t;
        Some(match self {
            Self::Zero => 0.0,
            Self::Constant(c) => c * x,
            Self::MaturityLinear { intercept, slope } => intercept * x + 0.5 * slope * (maturity * maturity - t * t),
            Self::TimeToMaturity { scale } => 0.5 * scale * x * x,
            Self::Exponential { scale, theta } => scale * decay_integral(*theta, x),
            Self::HullWhiteDrift { theta } => {
                let b = decay_integral(*theta, x);
                0.5 * b * b
            }
            Self::Sum(v) => {
                let mut acc = 0.0;
                for f in v {
                    acc += f.integral(t, maturity)?;
                }
                acc
            }
        })
    }
}

/// `(1 - exp(-theta x)) / theta`, equal to `x` in the limit `theta -> 0`.
pub fn decay_integral(theta: f64, x: f64) -> f64 {
    if theta.abs() < 1e-12 {
        x
    } else {
        -(-theta * x).exp_m1() / theta
    }
}
