//! Initial forward curves `f_0(T)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialCurve {
    Flat(f64),
    Linear {
        intercept: f64,
        slope: f64,
    },
    /// `(maturity, rate)` knots, linearly interpolated and flat beyond the ends.
    Tabulated(Vec<(f64, f64)>),
}

impl InitialCurve {
    pub fn flat(level: f64) -> Self {
        Self::Flat(level)
    }

    pub fn tabulated(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidCurve("tabulated curve needs at least two knots".into()));
        }
        if points.iter().any(|(t, r)| !t.is_finite() || !r.is_finite()) {
            return Err(Error::InvalidCurve("non-finite knot".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidCurve("duplicate maturity in knots".into()));
        }
        Ok(Self::Tabulated(points))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Flat(l) if !l.is_finite() => Err(Error::InvalidCurve(format!("non-finite level {l}"))),
            Self::Linear { intercept, slope } if !(intercept.is_finite() && slope.is_finite()) => {
                Err(Error::InvalidCurve("non-finite linear coefficients".into()))
            }
            Self::Tabulated(p) => Self::tabulated(p.clone()).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Flat(l) => *l,
            Self::Linear { intercept, slope } => intercept + slope * t,
            Self::Tabulated(p) => interpolate(p, t),
        }
    }

    /// `f_0'(t)`: exact for flat and linear curves; for tabulated curves a
    /// central difference with step `h`, one-sided at the knot range ends.
    pub fn derivative(&self, t: f64, h: f64) -> f64 {
        match self {
            Self::Flat(_) => 0.0,
            Self::Linear { slope, .. } => *slope,
            Self::Tabulated(p) => {
                let (first, last) = (p[0].0, p[p.len() - 1].0);
                let lo = (t - h).max(first);
                let hi = (t + h).min(last);
                if hi <= lo {
                    return 0.0;
                }
                (interpolate(p, hi) - interpolate(p, lo)) / (hi - lo)
            }
        }
    }
}

fn interpolate(p: &[(f64, f64)], t: f64) -> f64 {
    if t <= p[0].0 {
        return p[0].1;
    }
    let last = p[p.len() - 1];
    if t >= last.0 {
        return last.1;
    }
    let i = p.partition_point(|(x, _)| *x <= t);
    let (x0, y0) = p[i - 1];
    let (x1, y1) = p[i];
    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
}
