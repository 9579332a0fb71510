//! Strongly quasiconvex test problems and combinators that preserve the
//! property.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::{ensure_dim, hvp_or_fd, FunctionMetadata, Objective};

/// Ties of [`max_combine`] closer than this are treated as kinks.
pub const TIE_TOLERANCE: f64 = 1e-8;

/// Radius of the ball around the origin where [`norm_power`] refuses to
/// differentiate.
pub const NORM_POWER_GUARD: f64 = 1e-12;

/// Names accepted by [`from_name`].
pub const PROBLEM_NAMES: &[&str] = &[
    "example1",
    "example2",
    "norm_power",
    "quadratic",
    "cubic",
    "sigmoid_ratio",
];

/// An objective bundled with its known constants and a sampling region.
#[derive(Clone)]
pub struct TestProblem {
    pub name: String,
    pub objective: Arc<dyn Objective>,
    pub metadata: FunctionMetadata,
    /// `(lower, upper)` corners of the sampling box.
    pub test_box: (Vec<f64>, Vec<f64>),
    pub default_init: Vec<f64>,
    /// Set when the objective may fail to be differentiable somewhere.
    pub nonsmooth: bool,
}

impl fmt::Debug for TestProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("metadata", &self.metadata)
            .field("test_box", &self.test_box)
            .field("default_init", &self.default_init)
            .field("nonsmooth", &self.nonsmooth)
            .finish()
    }
}

impl TestProblem {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.objective.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.objective.gradient(x)
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        let (lo, hi) = &self.test_box;
        x.len() == lo.len() && x.iter().zip(lo).zip(hi).all(|((v, l), h)| l <= v && v <= h)
    }

    pub fn with_test_box(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        ensure_dim(self.dim(), &lower)?;
        ensure_dim(self.dim(), &upper)?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::invalid(
                "test box lower corner must not exceed upper corner",
            ));
        }
        self.test_box = (lower, upper);
        if !self.in_box(&self.default_init) {
            self.default_init = box_point(&self.test_box, 0.75);
        }
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: FunctionMetadata) -> Self {
        self.metadata = metadata;
        self
    }
}

fn cube(n: usize, half_width: f64) -> (Vec<f64>, Vec<f64>) {
    (vec![-half_width; n], vec![half_width; n])
}

/// `lower + t * (upper - lower)` componentwise.
fn box_point(test_box: &(Vec<f64>, Vec<f64>), t: f64) -> Vec<f64> {
    test_box
        .0
        .iter()
        .zip(&test_box.1)
        .map(|(l, u)| l + t * (u - l))
        .collect()
}

fn clamp_into(x: &mut [f64], test_box: &(Vec<f64>, Vec<f64>)) {
    for ((v, l), u) in x.iter_mut().zip(&test_box.0).zip(&test_box.1) {
        *v = v.clamp(*l, *u);
    }
}

#[derive(Debug)]
struct Example1;

impl Objective for Example1 {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(1, x)?;
        let s = x[0].sin();
        Ok(x[0] * x[0] + 2.0 * s * s)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(1, x)?;
        Ok(vec![2.0 * x[0] + 2.0 * (2.0 * x[0]).sin()])
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(
            ensure_dim(1, x)
                .and_then(|_| ensure_dim(1, v))
                .map(|_| vec![(2.0 + 4.0 * (2.0 * x[0]).cos()) * v[0]]),
        )
    }
}

/// `h(x) = x^2 + 2 sin^2 x`: nonconvex, strongly quasiconvex with modulus
/// 1/2, gradient Lipschitz with constant 6, minimizer 0.
pub fn example1() -> TestProblem {
    TestProblem {
        name: "example1".into(),
        objective: Arc::new(Example1),
        metadata: FunctionMetadata {
            gamma: 0.5,
            lipschitz_grad: 6.0,
            minimizer: Some(vec![0.0]),
            min_value: Some(0.0),
        },
        test_box: cube(1, 5.0),
        default_init: vec![3.0],
        nonsmooth: false,
    }
}

#[derive(Debug)]
struct Example2 {
    a: f64,
    b: f64,
    c: f64,
}

impl Example2 {
    fn u(&self, x: &[f64]) -> f64 {
        x[0] * x[0] + self.a * x[1] * x[1]
    }
}

impl Objective for Example2 {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(2, x)?;
        let u = self.u(x);
        Ok(u - 1.0 / (u + self.b) + self.c)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(2, x)?;
        let s = self.u(x) + self.b;
        let f = 1.0 + 1.0 / (s * s);
        Ok(vec![2.0 * x[0] * f, 2.0 * self.a * x[1] * f])
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Result<Vec<f64>>> {
        let run = || -> Result<Vec<f64>> {
            ensure_dim(2, x)?;
            ensure_dim(2, v)?;
            // grad h = f(u) grad u, so Hess h = f Hess u + f'(u) grad u grad u^T
            let s = self.u(x) + self.b;
            let f = 1.0 + 1.0 / (s * s);
            let df = -2.0 / (s * s * s);
            let gu = [2.0 * x[0], 2.0 * self.a * x[1]];
            let gu_v = gu[0] * v[0] + gu[1] * v[1];
            Ok(vec![
                f * 2.0 * v[0] + df * gu_v * gu[0],
                f * 2.0 * self.a * v[1] + df * gu_v * gu[1],
            ])
        };
        Some(run())
    }
}

/// `h(x, y) = x^2 + a y^2 - 1/(x^2 + a y^2 + b) + c`. The moduli are not
/// known in closed form, so `gamma` and `lipschitz_grad` are left at zero.
pub fn example2(a: f64, b: f64, c: f64) -> Result<TestProblem> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::invalid("example2 requires a, b, c > 0"));
    }
    Ok(TestProblem {
        name: "example2".into(),
        objective: Arc::new(Example2 { a, b, c }),
        metadata: FunctionMetadata {
            gamma: 0.0,
            lipschitz_grad: 0.0,
            minimizer: Some(vec![0.0, 0.0]),
            min_value: Some(c - 1.0 / b),
        },
        test_box: cube(2, 4.0),
        default_init: vec![3.0, 3.0],
        nonsmooth: false,
    })
}

#[derive(Debug)]
struct NormPower {
    alpha: f64,
    n: usize,
}

impl Objective for NormPower {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.n, x)?;
        Ok(linalg::norm(x).powf(self.alpha))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.n, x)?;
        let r = linalg::norm(x);
        if r <= NORM_POWER_GUARD {
            return Err(Error::NonDifferentiablePoint);
        }
        Ok(linalg::scale(self.alpha * r.powf(self.alpha - 2.0), x))
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Result<Vec<f64>>> {
        let run = || -> Result<Vec<f64>> {
            ensure_dim(self.n, x)?;
            ensure_dim(self.n, v)?;
            let r2 = linalg::norm_sq(x);
            let r = r2.sqrt();
            if r <= NORM_POWER_GUARD {
                return Err(Error::NonDifferentiablePoint);
            }
            let c = self.alpha * r.powf(self.alpha - 2.0);
            let xv = linalg::dot(x, v);
            Ok(v.iter()
                .zip(x)
                .map(|(vi, xi)| c * (vi + (self.alpha - 2.0) * xv / r2 * xi))
                .collect())
        };
        Some(run())
    }

    fn is_smooth_at(&self, x: &[f64]) -> bool {
        linalg::norm(x) > NORM_POWER_GUARD
    }
}

/// `h(x) = ||x||^alpha` with `0 < alpha < 1`. Strongly quasiconvex on
/// bounded convex sets only, with a set-dependent modulus recorded as 0.
pub fn norm_power(alpha: f64, n: usize) -> Result<TestProblem> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("norm_power requires 0 < alpha < 1"));
    }
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    Ok(TestProblem {
        name: "norm_power".into(),
        objective: Arc::new(NormPower { alpha, n }),
        metadata: FunctionMetadata {
            gamma: 0.0,
            lipschitz_grad: 0.0,
            minimizer: Some(vec![0.0; n]),
            min_value: Some(0.0),
        },
        test_box: cube(n, 1.0),
        default_init: vec![0.5; n],
        nonsmooth: true,
    })
}

/// Structural condition under which a quadratic ratio is strongly
/// quasiconvex on its level band `m <= g(x) <= M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioCondition {
    /// `B = 0`.
    ZeroDenominatorMatrix,
    /// `h >= 0` on the band and `B` negative semidefinite.
    NonnegativeWithNsdDenominator,
    /// `h <= 0` on the band and `B` positive semidefinite.
    NonpositiveWithPsdDenominator,
}

/// Quadratic form `0.5 <Qx, x> + <q, x> + c`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub matrix: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl Quadratic {
    pub fn new(matrix: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Self {
        Quadratic {
            matrix,
            linear,
            constant,
        }
    }

    fn eval(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.matrix * x)) + self.linear.dot(x) + self.constant
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x + &self.linear
    }
}

#[derive(Debug)]
struct QuadraticRatio {
    num: Quadratic,
    den: Quadratic,
    band: (f64, f64),
}

impl QuadraticRatio {
    fn denominator(&self, x: &DVector<f64>) -> Result<f64> {
        let g = self.den.eval(x);
        let (m, big_m) = self.band;
        if !(g >= m && g <= big_m) {
            return Err(Error::DomainViolation(format!(
                "denominator {g} outside [{m}, {big_m}]"
            )));
        }
        Ok(g)
    }
}

impl Objective for QuadraticRatio {
    fn dim(&self) -> usize {
        self.num.linear.len()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.dim(), x)?;
        let x = DVector::from_column_slice(x);
        let g = self.denominator(&x)?;
        Ok(self.num.eval(&x) / g)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x)?;
        let x = DVector::from_column_slice(x);
        let g = self.denominator(&x)?;
        let f = self.num.eval(&x);
        let grad = self.num.grad(&x) / g - self.den.grad(&x) * (f / (g * g));
        Ok(grad.as_slice().to_vec())
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Result<Vec<f64>>> {
        let run = || -> Result<Vec<f64>> {
            ensure_dim(self.dim(), x)?;
            ensure_dim(self.dim(), v)?;
            let x = DVector::from_column_slice(x);
            let v = DVector::from_column_slice(v);
            let g = self.denominator(&x)?;
            let f = self.num.eval(&x);
            let gf = self.num.grad(&x);
            let gg = self.den.grad(&x);
            let (gf_v, gg_v) = (gf.dot(&v), gg.dot(&v));
            let g2 = g * g;
            let hv = &self.num.matrix * &v / g
                - (&gf * gg_v + &gg * gf_v) / g2
                - &self.den.matrix * &v * (f / g2)
                + &gg * (2.0 * f * gg_v / (g2 * g));
            Ok(hv.as_slice().to_vec())
        };
        Some(run())
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    m.is_square() && (m - m.transpose()).amax() <= 1e-12 * scale
}

/// Ratio `f/g` of two quadratics on the band `{x : m <= g(x) <= M}`, with
/// modulus `lambda_min(A) / M`. Evaluating outside the band is a
/// [`Error::DomainViolation`].
pub fn quadratic_ratio(
    num: Quadratic,
    den: Quadratic,
    m: f64,
    big_m: f64,
    condition: RatioCondition,
) -> Result<TestProblem> {
    let n = num.linear.len();
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if num.matrix.shape() != (n, n) || den.matrix.shape() != (n, n) || den.linear.len() != n {
        return Err(Error::invalid("quadratic ratio shapes do not agree"));
    }
    if !is_symmetric(&num.matrix) || !is_symmetric(&den.matrix) {
        return Err(Error::invalid("quadratic forms must be symmetric"));
    }
    if !(m > 0.0 && m <= big_m) {
        return Err(Error::invalid("band requires 0 < m <= M"));
    }
    let eig_a = num.matrix.clone().symmetric_eigenvalues();
    let lambda_min = eig_a.min();
    if !(lambda_min > 0.0) {
        return Err(Error::invalid("numerator matrix must be positive definite"));
    }
    let eig_b = den.matrix.clone().symmetric_eigenvalues();
    let structural_ok = match condition {
        RatioCondition::ZeroDenominatorMatrix => den.matrix.iter().all(|&v| v == 0.0),
        RatioCondition::NonnegativeWithNsdDenominator => eig_b.max() <= 0.0,
        RatioCondition::NonpositiveWithPsdDenominator => eig_b.min() >= 0.0,
    };
    if !structural_ok {
        return Err(Error::invalid(format!(
            "denominator matrix does not satisfy {condition:?}"
        )));
    }

    // A constant denominator makes h a scaled quadratic with a closed-form
    // minimizer and curvature.
    let constant_den = den.matrix.iter().all(|&v| v == 0.0) && den.linear.iter().all(|&v| v == 0.0);
    let mut metadata = FunctionMetadata {
        gamma: lambda_min / big_m,
        ..FunctionMetadata::default()
    };
    let mut center = vec![0.0; n];
    if constant_den {
        let g = den.constant;
        if let Some(inv) = num.matrix.clone().try_inverse() {
            let xbar = -(inv * &num.linear);
            metadata.min_value = Some(num.eval(&xbar) / g);
            center = xbar.as_slice().to_vec();
            metadata.minimizer = Some(center.clone());
        }
        metadata.lipschitz_grad = eig_a.max() / g;
    }
    let test_box = (
        center.iter().map(|c| c - 5.0).collect::<Vec<_>>(),
        center.iter().map(|c| c + 5.0).collect::<Vec<_>>(),
    );
    let default_init = box_point(&test_box, 0.8);
    Ok(TestProblem {
        name: "quadratic_ratio".into(),
        objective: Arc::new(QuadraticRatio {
            num,
            den,
            band: (m, big_m),
        }),
        metadata,
        test_box,
        default_init,
        nonsmooth: false,
    })
}

/// `0.5 ||x||^2` built as a quadratic ratio with a unit denominator.
pub fn quadratic(n: usize) -> Result<TestProblem> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let mut p = quadratic_ratio(
        Quadratic::new(DMatrix::identity(n, n), DVector::zeros(n), 0.0),
        Quadratic::new(DMatrix::zeros(n, n), DVector::zeros(n), 1.0),
        1.0,
        1.0,
        RatioCondition::ZeroDenominatorMatrix,
    )?;
    p.name = "quadratic".into();
    p.default_init = vec![3.0; n];
    Ok(p)
}

struct ComposeLinear {
    inner: Arc<dyn Objective>,
    map: DMatrix<f64>,
}

impl ComposeLinear {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.map * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }

    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        (self.map.transpose() * DVector::from_column_slice(y))
            .as_slice()
            .to_vec()
    }
}

impl Objective for ComposeLinear {
    fn dim(&self) -> usize {
        self.map.ncols()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        ensure_dim(self.dim(), x)?;
        self.inner.value(&self.apply(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x)?;
        let g = self.inner.gradient(&self.apply(x))?;
        Ok(self.apply_transpose(&g))
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Result<Vec<f64>>> {
        let run = || -> Result<Vec<f64>> {
            ensure_dim(self.dim(), x)?;
            ensure_dim(self.dim(), v)?;
            let hv = hvp_or_fd(self.inner.as_ref(), &self.apply(x), &self.apply(v))?;
            Ok(self.apply_transpose(&hv))
        };
        Some(run())
    }

    fn is_smooth_at(&self, x: &[f64]) -> bool {
        self.inner.is_smooth_at(&self.apply(x))
    }
}

/// `x -> h(Ax)` where `A` has as many rows as the inner problem's dimension.
///
/// The modulus becomes `gamma * sigma_min(A)^2`, and zero when `A` has a
/// nontrivial kernel.
pub fn compose_linear(p: &TestProblem, a: &DMatrix<f64>) -> Result<TestProblem> {
    if a.nrows() != p.dim() || a.ncols() == 0 {
        return Err(Error::invalid(format!(
            "matrix is {}x{}, inner problem has dimension {}",
            a.nrows(),
            a.ncols(),
            p.dim()
        )));
    }
    let singular = a.clone().singular_values();
    let sigma_max = singular.max();
    let sigma_min = if a.ncols() > a.nrows() {
        0.0
    } else {
        singular.min()
    };
    let n = a.ncols();

    let mut metadata = FunctionMetadata {
        gamma: p.metadata.gamma * sigma_min * sigma_min,
        lipschitz_grad: p.metadata.lipschitz_grad * sigma_max * sigma_max,
        minimizer: None,
        min_value: None,
    };
    let inverse = if a.is_square() && sigma_min > 0.0 {
        a.clone().try_inverse()
    } else {
        None
    };
    let solve = |y: &[f64]| -> Option<Vec<f64>> {
        inverse
            .as_ref()
            .map(|inv| (inv * DVector::from_column_slice(y)).as_slice().to_vec())
    };
    if let (Some(xbar), Some(hstar)) = (&p.metadata.minimizer, p.metadata.min_value) {
        if let Some(pre) = solve(xbar) {
            metadata.minimizer = Some(pre);
            metadata.min_value = Some(hstar);
        }
    }

    let reach = p
        .test_box
        .0
        .iter()
        .chain(&p.test_box.1)
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let half = if sigma_max > 0.0 {
        reach / sigma_max
    } else {
        reach
    };
    let center = metadata.minimizer.clone().unwrap_or_else(|| vec![0.0; n]);
    let test_box = (
        center.iter().map(|c| c - half).collect::<Vec<_>>(),
        center.iter().map(|c| c + half).collect::<Vec<_>>(),
    );
    let mut default_init = solve(&p.default_init).unwrap_or_else(|| box_point(&test_box, 0.75));
    clamp_into(&mut default_init, &test_box);

    Ok(TestProblem {
        name: format!("{}_composed", p.name),
        objective: Arc::new(ComposeLinear {
            inner: Arc::clone(&p.objective),
            map: a.clone(),
        }),
        metadata,
        test_box,
        default_init,
        nonsmooth: p.nonsmooth,
    })
}

struct MaxCombine {
    first: Arc<dyn Objective>,
    second: Arc<dyn Objective>,
}

impl MaxCombine {
    /// The branch attaining the max, ties going to the first.
    fn active(&self, x: &[f64]) -> Result<&dyn Objective> {
        let h1 = self.first.value(x)?;
        let h2 = self.second.value(x)?;
        Ok(if h1 >= h2 {
            self.first.as_ref()
        } else {
            self.second.as_ref()
        })
    }
}

impl Objective for MaxCombine {
    fn dim(&self) -> usize {
        self.first.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.first.value(x)?.max(self.second.value(x)?))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.active(x)?.gradient(x)
    }

    fn hvp(&self, x: &[f64], v: &[f64]) -> Option<Result<Vec<f64>>> {
        Some(self.active(x).and_then(|branch| hvp_or_fd(branch, x, v)))
    }

    fn is_smooth_at(&self, x: &[f64]) -> bool {
        match (self.first.value(x), self.second.value(x)) {
            (Ok(h1), Ok(h2)) => {
                (h1 - h2).abs() >= TIE_TOLERANCE
                    && if h1 >= h2 {
                        self.first.is_smooth_at(x)
                    } else {
                        self.second.is_smooth_at(x)
                    }
            }
            _ => false,
        }
    }
}

/// Pointwise maximum of two problems, with modulus `min(gamma1, gamma2)`.
/// The result is flagged nonsmooth.
pub fn max_combine(p1: &TestProblem, p2: &TestProblem) -> Result<TestProblem> {
    if p1.dim() != p2.dim() {
        return Err(Error::invalid(format!(
            "dimensions differ: {} vs {}",
            p1.dim(),
            p2.dim()
        )));
    }
    let gamma = if p1.metadata.gamma > 0.0 && p2.metadata.gamma > 0.0 {
        p1.metadata.gamma.min(p2.metadata.gamma)
    } else {
        0.0
    };
    let objective = MaxCombine {
        first: Arc::clone(&p1.objective),
        second: Arc::clone(&p2.objective),
    };
    let mut metadata = FunctionMetadata {
        gamma,
        ..FunctionMetadata::default()
    };
    // A shared minimizer stays the minimizer of the max.
    if let (Some(x1), Some(x2)) = (&p1.metadata.minimizer, &p2.metadata.minimizer) {
        if x1 == x2 {
            metadata.min_value = Some(objective.value(x1)?);
            metadata.minimizer = Some(x1.clone());
        }
    }
    let lower: Vec<f64> = p1
        .test_box
        .0
        .iter()
        .zip(&p2.test_box.0)
        .map(|(a, b)| a.max(*b))
        .collect();
    let upper: Vec<f64> = p1
        .test_box
        .1
        .iter()
        .zip(&p2.test_box.1)
        .map(|(a, b)| a.min(*b))
        .collect();
    let test_box = if lower.iter().zip(&upper).all(|(l, u)| l <= u) {
        (lower, upper)
    } else {
        p1.test_box.clone()
    };
    let mut default_init = p1.default_init.clone();
    clamp_into(&mut default_init, &test_box);
    Ok(TestProblem {
        name: format!("max({},{})", p1.name, p2.name),
        objective: Arc::new(objective),
        metadata,
        test_box,
        default_init,
        nonsmooth: true,
    })
}

/// `h(x) = x^3` on `[-1, 1]`: not quasiconvex in the strong sense, used to
/// exercise failing checks.
pub fn cubic() -> TestProblem {
    let objective =
        crate::objective::FnObjective::new(1, |x| x[0].powi(3), |x| vec![3.0 * x[0] * x[0]])
            .with_hvp(|x, v| vec![6.0 * x[0] * v[0]]);
    TestProblem {
        name: "cubic".into(),
        objective: Arc::new(objective),
        metadata: FunctionMetadata::default(),
        test_box: cube(1, 1.0),
        default_init: vec![0.5],
        nonsmooth: false,
    }
}

/// `h(x) = x / (1 + |x|)` on `[-3, 3]`: strictly but not strongly
/// quasiconvex.
pub fn sigmoid_ratio() -> TestProblem {
    let objective = crate::objective::FnObjective::new(
        1,
        |x| x[0] / (1.0 + x[0].abs()),
        |x| {
            let d = 1.0 + x[0].abs();
            vec![1.0 / (d * d)]
        },
    )
    .with_hvp(|x, v| {
        let d = 1.0 + x[0].abs();
        vec![-2.0 * x[0].signum() / (d * d * d) * v[0]]
    });
    TestProblem {
        name: "sigmoid_ratio".into(),
        objective: Arc::new(objective),
        metadata: FunctionMetadata::default(),
        test_box: cube(1, 3.0),
        default_init: vec![1.0],
        nonsmooth: false,
    }
}

/// Looks a problem up by registry name. `args` are the constructor
/// arguments; missing ones take their defaults.
///
/// | name | args | defaults |
/// |---|---|---|
/// | `example1` | none | |
/// | `example2` | `a, b, c` | `100, 1, 1` |
/// | `norm_power` | `alpha, n` | `0.5, 1` |
/// | `quadratic` | `n` | `1` |
/// | `cubic`, `sigmoid_ratio` | none | |
pub fn from_name(name: &str, args: &[f64]) -> Result<TestProblem> {
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let dim_arg = |i: usize| -> Result<usize> {
        let v = arg(i, 1.0);
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::invalid(format!(
                "dimension must be a positive integer, got {v}"
            )))
        }
    };
    let max_args = match name {
        "example1" | "cubic" | "sigmoid_ratio" => 0,
        "example2" => 3,
        "norm_power" => 2,
        "quadratic" => 1,
        _ => return Err(Error::invalid(format!("unknown problem '{name}'"))),
    };
    if args.len() > max_args {
        return Err(Error::invalid(format!(
            "problem '{name}' takes at most {max_args} arguments, got {}",
            args.len()
        )));
    }
    match name {
        "example1" => Ok(example1()),
        "example2" => example2(arg(0, 100.0), arg(1, 1.0), arg(2, 1.0)),
        "norm_power" => norm_power(arg(0, 0.5), dim_arg(1)?),
        "quadratic" => quadratic(dim_arg(0)?),
        "cubic" => Ok(cubic()),
        "sigmoid_ratio" => Ok(sigmoid_ratio()),
        _ => unreachable!(),
    }
}

/// Problems with trustworthy analytic derivatives, used by the derivative
/// and structure test suites.
pub fn zoo() -> Vec<TestProblem> {
    let e1 = example1();
    let scaled = compose_linear(&e1, &DMatrix::from_element(1, 1, 2.0)).expect("1x1 map");
    let rotated = compose_linear(
        &example2(1.0, 1.0, 1.0).expect("valid constants"),
        &DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]),
    )
    .expect("2x2 map");
    let ratio = quadratic_ratio(
        Quadratic::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 8.0]),
            DVector::from_column_slice(&[1.0, -1.0]),
            0.5,
        ),
        Quadratic::new(DMatrix::zeros(2, 2), DVector::zeros(2), 2.0),
        2.0,
        2.0,
        RatioCondition::ZeroDenominatorMatrix,
    )
    .expect("valid ratio");
    vec![
        e1.clone(),
        example2(100.0, 1.0, 1.0).expect("valid constants"),
        example2(1.0, 1.0, 1.0).expect("valid constants"),
        norm_power(0.5, 2).expect("valid exponent"),
        quadratic(3).expect("valid dimension"),
        ratio,
        scaled.clone(),
        rotated,
        max_combine(&e1, &scaled).expect("equal dims"),
        cubic(),
        sigmoid_ratio(),
    ]
}
