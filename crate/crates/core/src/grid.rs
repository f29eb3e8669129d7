//! Uniform time grids on `[0, tau]` and the quadrature rules used on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_k = k * tau / n_steps`, `k = 0..=n_steps`.
///
/// The same grid serves as the maturity grid of every forward surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    tau: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, n_steps: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidGrid(format!("tau must be positive and finite, got {tau}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self { tau, n_steps })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.n_steps as f64
    }

    /// Node time. Computed as `tau * k / n` so that `t(n) == tau` exactly.
    pub fn t(&self, k: usize) -> f64 {
        self.tau * k as f64 / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.t(k)).collect()
    }

    /// Index of the node closest to `t`, if `t` is on the grid up to a
    /// relative tolerance of `1e-9` of a step.
    pub fn node_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt();
        let k = x.round();
        if k < 0.0 || k > self.n_steps as f64 || (x - k).abs() > 1e-9 {
            return None;
        }
        Some(k as usize)
    }

    /// Like [`TimeGrid::node_of`] but returns an error naming `what`.
    pub fn require_node(&self, t: f64, what: &str) -> Result<usize> {
        self.node_of(t).ok_or_else(|| {
            Error::InvalidArgument(format!("{what} = {t} is not a node of the grid (dt = {})", self.dt()))
        })
    }

    /// Same tau, `n_steps / factor` steps.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_steps % factor != 0 {
            return Err(Error::InvalidGrid(format!("cannot coarsen {} steps by a factor of {factor}", self.n_steps)));
        }
        Self::new(self.tau, self.n_steps / factor)
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n_steps == other.n_steps && self.tau == other.tau
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid, what: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: grid (tau={}, n={}) vs (tau={}, n={})",
                self.tau, self.n_steps, other.tau, other.n_steps
            )))
        }
    }
}

/// Trapezoid rule over consecutive samples spaced `h` apart.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            h * (0.5 * (values[0] + values[n - 1]) + interior)
        }
    }
}

/// Running trapezoid integrals: `out[i] = trapezoid(values[..=i], h)`.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Packed upper-triangular storage for fields indexed by
/// `(time node k, maturity node m)` with `k <= m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularField {
    n: usize,
    data: Vec<f64>,
}

impl TriangularField {
    pub fn zeros(n_nodes: usize) -> Self {
        Self { n: n_nodes, data: vec![0.0; n_nodes * (n_nodes + 1) / 2] }
    }

    pub fn from_fn(n_nodes: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::zeros(n_nodes);
        for k in 0..n_nodes {
            for m in k..n_nodes {
                let i = out.index(k, m);
                out.data[i] = f(k, m);
            }
        }
        out
    }

    /// Number of nodes along each axis.
    pub fn n_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, k: usize) -> usize {
        k * self.n - k * k.saturating_sub(1) / 2
    }

    #[inline]
    fn index(&self, k: usize, m: usize) -> usize {
        debug_assert!(k <= m && m < self.n, "({k}, {m}) outside triangle of size {}", self.n);
        self.offset(k) + (m - k)
    }

    #[inline]
    pub fn get(&self, k: usize, m: usize) -> f64 {
        self.data[self.index(k, m)]
    }

    #[inline]
    pub fn set(&mut self, k: usize, m: usize, v: f64) {
        let i = self.index(k, m);
        self.data[i] = v;
    }

    /// Maturity slice `m = k..n` of row `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        let start = self.offset(k);
        &self.data[start..start + (self.n - k)]
    }

    pub fn row_mut(&mut self, k: usize) -> &mut [f64] {
        let start = self.offset(k);
        let len = self.n - k;
        &mut self.data[start..start + len]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// First non-finite entry as `(k, m)`.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        (0..self.n).find_map(|k| self.row(k).iter().position(|v| !v.is_finite()).map(|j| (k, k + j)))
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n, "triangular field size mismatch");
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect() }
    }
}
