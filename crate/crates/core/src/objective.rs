//! The objective abstraction, its metadata, and finite-difference oracles.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg;

/// A differentiable function `h: R^n -> R`.
///
/// Implementations must be pure: evaluating twice at the same point returns
/// bitwise-identical results, and no interior state is mutated. This is what
/// lets solvers and checkers share one instance across threads.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Exact Hessian-vector product, when the objective provides one.
    fn hvp(&self, _x: &[f64], _v: &[f64]) -> Option<Result<Vec<f64>>> {
        None
    }

    /// `false` near kinks (ties of a max, the apex of a norm power) so that
    /// smooth-only checks can skip the point.
    fn is_smooth_at(&self, _x: &[f64]) -> bool {
        true
    }
}

pub(crate) fn ensure_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::invalid(format!(
            "expected a vector of length {expected}, got {}",
            x.len()
        )));
    }
    Ok(())
}

type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type HvpFn = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Objective assembled from closures.
pub struct FnObjective {
    dim: usize,
    value: ScalarFn,
    gradient: VectorFn,
    hvp: Option<HvpFn>,
}

impl FnObjective {
    pub fn new<F, G>(dim: usize, value: F, gradient: G) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        FnObjective {
            dim,
            value: Box::new(value),
            gradient: Box::new(gradient),
            hvp: None,
        }
    }

    pub fn with_hvp<H>(mut self, hvp: H) -> Self
    where
        H: Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        self.hvp = Some(Box::new(hvp));
        self
    }
}

impl fmt::Debug for FnObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnObjective")
            .field("dim", &self.dim)
            .field("hvp", &self.hvp.is_some())
            .finish()
    }
}

impl Objective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.dim, x)?;
        Ok((self.value)(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim, x)?;
        Ok((self.gradient)(x))
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Result<Vec<f64>>> {
        let hvp = self.hvp.as_ref()?;
        Some(
            ensure_dim(self.dim, x)
                .and_then(|_| ensure_dim(self.dim, v))
                .map(|_| hvp(x, v)),
        )
    }
}

/// Known constants of an objective. Zero means "unknown" for `gamma` and
/// `lipschitz_grad`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FunctionMetadata {
    /// Strong-quasiconvexity modulus.
    pub gamma: f64,
    /// Lipschitz constant of the gradient.
    pub lipschitz_grad: f64,
    pub minimizer: Option<Vec<f64>>,
    pub min_value: Option<f64>,
}

impl FunctionMetadata {
    pub fn gamma(&self) -> Option<f64> {
        (self.gamma > 0.0).then_some(self.gamma)
    }

    pub fn lipschitz(&self) -> Option<f64> {
        (self.lipschitz_grad > 0.0).then_some(self.lipschitz_grad)
    }

    /// `h(x) - h*` when `h*` is known, otherwise the raw value.
    pub fn gap(&self, value: f64) -> f64 {
        match self.min_value {
            Some(h_star) => value - h_star,
            None => value,
        }
    }
}

/// Central-difference gradient with step `h_step`.
pub fn finite_diff_gradient(obj: &dyn Objective, x: &[f64], h_step: f64) -> Result<Vec<f64>> {
    ensure_dim(obj.dim(), x)?;
    if !(h_step > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h_step;
        let fp = obj.value(&probe)?;
        probe[i] = x[i] - h_step;
        let fm = obj.value(&probe)?;
        probe[i] = x[i];
        grad.push((fp - fm) / (2.0 * h_step));
    }
    Ok(grad)
}

/// Central difference of the gradient along `v`, with the step scaled to
/// the magnitudes of `x` and `v`.
pub fn finite_diff_hvp(obj: &dyn Objective, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    ensure_dim(obj.dim(), x)?;
    ensure_dim(obj.dim(), v)?;
    let v_norm = linalg::norm(v);
    if !(v_norm > 0.0) {
        return Err(Error::invalid("direction must be nonzero"));
    }
    let eps = f64::EPSILON.sqrt() * (1.0 + linalg::norm(x)) / v_norm;
    let mut plus = x.to_vec();
    linalg::axpy(eps, v, &mut plus);
    let mut minus = x.to_vec();
    linalg::axpy(-eps, v, &mut minus);
    let gp = obj.gradient(&plus)?;
    let gm = obj.gradient(&minus)?;
    Ok(gp
        .iter()
        .zip(&gm)
        .map(|(a, b)| (a - b) / (2.0 * eps))
        .collect())
}

/// Exact HVP when available, otherwise the finite-difference fallback. A
/// zero direction yields the zero vector.
pub fn hvp_or_fd(obj: &dyn Objective, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().all(|&c| c == 0.0) {
        ensure_dim(obj.dim(), x)?;
        ensure_dim(obj.dim(), v)?;
        return Ok(vec![0.0; v.len()]);
    }
    match obj.hvp(x, v) {
        Some(result) => result,
        None => finite_diff_hvp(obj, x, v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> FnObjective {
        FnObjective::new(1, |x| x[0] * x[0], |x| vec![2.0 * x[0]])
    }

    fn half_norm_sq(n: usize) -> FnObjective {
        FnObjective::new(n, |x| 0.5 * linalg::norm_sq(x), |x| x.to_vec())
    }

    #[test]
    fn fd_gradient_of_square_at_origin() {
        let g = finite_diff_gradient(&square(), &[0.0], 1e-5).unwrap();
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn fd_gradient_dimension_mismatch() {
        let obj = half_norm_sq(2);
        assert!(matches!(
            finite_diff_gradient(&obj, &[1.0, 2.0, 3.0], 1e-6),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn fd_gradient_rejects_bad_step() {
        assert!(finite_diff_gradient(&square(), &[1.0], 0.0).is_err());
    }

    #[test]
    fn fd_hvp_identity_hessian() {
        let obj = half_norm_sq(3);
        let hv = finite_diff_hvp(&obj, &[0.3, -2.0, 5.0], &[1.0, 0.0, 0.0]).unwrap();
        for (got, want) in hv.iter().zip([1.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        }
    }

    #[test]
    fn fd_hvp_zero_direction() {
        let obj = half_norm_sq(2);
        assert!(matches!(
            finite_diff_hvp(&obj, &[1.0, 1.0], &[0.0, 0.0]),
            Err(Error::InvalidInput(_))
        ));
        assert_eq!(
            hvp_or_fd(&obj, &[1.0, 1.0], &[0.0, 0.0]).unwrap(),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn gap_uses_min_value_when_known() {
        let mut meta = FunctionMetadata::default();
        assert_eq!(meta.gap(3.0), 3.0);
        meta.min_value = Some(1.0);
        assert_eq!(meta.gap(3.0), 2.0);
    }
}
