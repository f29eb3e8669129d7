//! Forward-rate coefficient triples `(alpha, beta, gamma)` sampled on the
//! grid, with their maturity integrals `(a, b, c)`.

use crate::error::{Error, Result};
use crate::field::CoefficientField;
use crate::grid::{cumulative_trapezoid, TimeGrid, TriangularField};

/// Coefficients of `df_t(T) = alpha dt + sum_i beta^i dB^i + sum_ij gamma^ij d<B^i,B^j>`
/// on the `(t_k, T_m)`, `k <= m` triangle of a grid.
///
/// `a(t,T) = ∫_t^T alpha(t,s) ds` and likewise for `b`, `c`. Integrals use the
/// closed form of the generating field when one exists and the trapezoid
/// rule on the maturity grid otherwise. Simulation supports `dim == 1` only;
/// the drift-condition algebra works for any `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct HjmCoefficients {
    grid: TimeGrid,
    dim: usize,
    alpha: TriangularField,
    beta: Vec<TriangularField>,
    gamma: Vec<TriangularField>,
    a: TriangularField,
    b: Vec<TriangularField>,
    c: Vec<TriangularField>,
}

pub(crate) fn sample(grid: TimeGrid, field: &CoefficientField) -> TriangularField {
    TriangularField::from_fn(grid.len(), |k, m| field.value(grid.t(k), grid.t(m)))
}

pub(crate) fn integrate_rows(grid: TimeGrid, values: &TriangularField) -> TriangularField {
    let n = grid.len();
    let dt = grid.dt();
    let mut out = TriangularField::zeros(n);
    for k in 0..n {
        let cum = cumulative_trapezoid(values.row(k), dt);
        out.row_mut(k).copy_from_slice(&cum);
    }
    out
}

pub(crate) fn integrate_field(grid: TimeGrid, field: &CoefficientField, sampled: &TriangularField) -> TriangularField {
    if field.integral(0.0, 0.0).is_some() {
        TriangularField::from_fn(grid.len(), |k, m| {
            field.integral(grid.t(k), grid.t(m)).expect("closed form checked above")
        })
    } else {
        integrate_rows(grid, sampled)
    }
}

impl HjmCoefficients {
    /// One-factor coefficients from analytic fields.
    pub fn from_fields(
        grid: TimeGrid,
        alpha: &CoefficientField,
        beta: &CoefficientField,
        gamma: &CoefficientField,
    ) -> Result<Self> {
        let (sa, sb, sg) = (sample(grid, alpha), sample(grid, beta), sample(grid, gamma));
        let a = integrate_field(grid, alpha, &sa);
        let b = integrate_field(grid, beta, &sb);
        let c = integrate_field(grid, gamma, &sg);
        Self::from_parts(grid, 1, sa, vec![sb], vec![sg], a, vec![b], vec![c])
    }

    /// Coefficients from grid samples; integrals by the trapezoid rule.
    /// `gamma` is indexed `i * dim + j`.
    pub fn from_grid(
        grid: TimeGrid,
        alpha: TriangularField,
        beta: Vec<TriangularField>,
        gamma: Vec<TriangularField>,
    ) -> Result<Self> {
        let dim = beta.len();
        let a = integrate_rows(grid, &alpha);
        let b = beta.iter().map(|f| integrate_rows(grid, f)).collect();
        let c = gamma.iter().map(|f| integrate_rows(grid, f)).collect();
        Self::from_parts(grid, dim, alpha, beta, gamma, a, b, c)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        grid: TimeGrid,
        dim: usize,
        alpha: TriangularField,
        beta: Vec<TriangularField>,
        gamma: Vec<TriangularField>,
        a: TriangularField,
        b: Vec<TriangularField>,
        c: Vec<TriangularField>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("coefficient dimension must be at least 1".into()));
        }
        if beta.len() != dim || b.len() != dim || gamma.len() != dim * dim || c.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "dimension {dim} needs {dim} beta and {} gamma fields",
                dim * dim
            )));
        }
        let n = grid.len();
        let all = std::iter::once(("alpha", &alpha))
            .chain(beta.iter().map(|f| ("beta", f)))
            .chain(gamma.iter().map(|f| ("gamma", f)))
            .chain(std::iter::once(("a", &a)))
            .chain(b.iter().map(|f| ("b", f)))
            .chain(c.iter().map(|f| ("c", f)));
        for (name, f) in all {
            if f.n_nodes() != n {
                return Err(Error::GridMismatch(format!("{name} has {} nodes, grid has {n}", f.n_nodes())));
            }
            if let Some((k, m)) = f.first_non_finite() {
                return Err(Error::NonFiniteCoefficient { field: name, t: grid.t(k), maturity: grid.t(m) });
            }
        }
        Ok(Self { grid, dim, alpha, beta, gamma, a, b, c })
    }

    /// All coefficients zero.
    pub fn zero(grid: TimeGrid, dim: usize) -> Result<Self> {
        let z = TriangularField::zeros(grid.len());
        Self::from_parts(
            grid,
            dim,
            z.clone(),
            vec![z.clone(); dim],
            vec![z.clone(); dim * dim],
            z.clone(),
            vec![z.clone(); dim],
            vec![z; dim * dim],
        )
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn require_scalar(&self) -> Result<()> {
        if self.dim == 1 {
            Ok(())
        } else {
            Err(Error::Dimension { expected: 1, found: self.dim })
        }
    }

    pub fn alpha_field(&self) -> &TriangularField {
        &self.alpha
    }
    pub fn beta_field(&self, i: usize) -> &TriangularField {
        &self.beta[i]
    }
    pub fn gamma_field(&self, i: usize, j: usize) -> &TriangularField {
        &self.gamma[i * self.dim + j]
    }
    pub fn a_field(&self) -> &TriangularField {
        &self.a
    }
    pub fn b_field(&self, i: usize) -> &TriangularField {
        &self.b[i]
    }
    pub fn c_field(&self, i: usize, j: usize) -> &TriangularField {
        &self.c[i * self.dim + j]
    }

    // One-factor shorthands.
    #[inline]
    pub fn alpha(&self, k: usize, m: usize) -> f64 {
        self.alpha.get(k, m)
    }
    #[inline]
    pub fn beta(&self, k: usize, m: usize) -> f64 {
        self.beta[0].get(k, m)
    }
    #[inline]
    pub fn gamma(&self, k: usize, m: usize) -> f64 {
        self.gamma[0].get(k, m)
    }
    #[inline]
    pub fn a(&self, k: usize, m: usize) -> f64 {
        self.a.get(k, m)
    }
    #[inline]
    pub fn b(&self, k: usize, m: usize) -> f64 {
        self.b[0].get(k, m)
    }
    #[inline]
    pub fn c(&self, k: usize, m: usize) -> f64 {
        self.c[0].get(k, m)
    }

    /// Largest absolute coefficient value across `alpha`, `beta`, `gamma`.
    pub fn scale(&self) -> f64 {
        std::iter::once(&self.alpha).chain(&self.beta).chain(&self.gamma).fold(0.0, |acc, f| acc.max(f.max_abs()))
    }

    /// Adds `delta` to `alpha` (and its integral to `a`).
    pub fn with_alpha_shift(&self, delta: &CoefficientField) -> Result<Self> {
        let s = sample(self.grid, delta);
        let si = integrate_field(self.grid, delta, &s);
        let mut out = self.clone();
        out.alpha = out.alpha.zip_with(&s, |x, y| x + y);
        out.a = out.a.zip_with(&si, |x, y| x + y);
        Self::from_parts(out.grid, out.dim, out.alpha, out.beta, out.gamma, out.a, out.b, out.c)
    }

    pub(crate) fn into_parts(
        self,
    ) -> (
        TimeGrid,
        usize,
        TriangularField,
        Vec<TriangularField>,
        Vec<TriangularField>,
        TriangularField,
        Vec<TriangularField>,
        Vec<TriangularField>,
    ) {
        (self.grid, self.dim, self.alpha, self.beta, self.gamma, self.a, self.b, self.c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrals_vanish_on_diagonal() {
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let c = HjmCoefficients::from_fields(
            grid,
            &CoefficientField::Constant(-0.1),
            &CoefficientField::hull_white(0.5),
            &CoefficientField::TimeToMaturity { scale: 1.0 },
        )
        .unwrap();
        for k in 0..grid.len() {
            assert_eq!(c.a(k, k), 0.0);
            assert_eq!(c.b(k, k), 0.0);
            assert_eq!(c.c(k, k), 0.0);
        }
        assert!((c.a(0, 20) + 0.1).abs() < 1e-15);
        assert!((c.c(0, 20) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn grid_samples_use_trapezoid() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let beta = sample(grid, &CoefficientField::TimeToMaturity { scale: 1.0 });
        let z = TriangularField::zeros(grid.len());
        let c = HjmCoefficients::from_grid(grid, z.clone(), vec![beta], vec![z]).unwrap();
        // (T - t) is linear in T, so the trapezoid rule is exact.
        assert!((c.b(0, 10) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let mut alpha = TriangularField::zeros(grid.len());
        alpha.set(1, 3, f64::NAN);
        let z = TriangularField::zeros(grid.len());
        let err = HjmCoefficients::from_grid(grid, alpha, vec![z.clone()], vec![z]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteCoefficient { field: "alpha", .. }));
    }

    #[test]
    fn dimension_bookkeeping() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let z = TriangularField::zeros(grid.len());
        assert!(HjmCoefficients::from_grid(grid, z.clone(), vec![z.clone(); 2], vec![z.clone(); 3]).is_err());
        let two = HjmCoefficients::zero(grid, 2).unwrap();
        assert_eq!(two.dim(), 2);
        assert!(two.require_scalar().is_err());
    }
}
