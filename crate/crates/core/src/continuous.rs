//! Fixed-step integration of the inertial system with Hessian-driven damping
//!
//! ```text
//! x'' + alpha x' + beta ∇²h(x) x' + ∇h(x) = 0,
//! ```
//!
//! written as the first-order system `x' = v`, `v' = -alpha v - beta ∇²h(x) v - ∇h(x)`,
//! together with checks of its exponential energy decay and of the weighted
//! integral bounds on `‖∇h(x(t))‖²` and `‖x'(t)‖²`.
//!
//! The decay checks use the energy
//!
//! ```text
//! E(t) = h(x) - h* + ½‖λ(x - x̄) + v + β∇h(x)‖²,   λ = 2α/(κ + 2),
//! ```
//!
//! where `κ` is a quasar-convexity modulus of `h` around `x̄`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::functions::TestProblem;
use crate::linalg;
use crate::objective::{hvp_or_fd, FunctionMetadata};
use crate::record::ReportRecord;
use crate::solvers::DIVERGENCE_LIMIT;

/// Default integration step.
pub const DEFAULT_DT: f64 = 1e-3;

/// Relative slack allowed on the decay checks.
pub const DECAY_SLACK: f64 = 1e-6;

/// A normalized integral counts as bounded when its maximum over the final
/// quarter of the horizon stays within this factor of its earlier maximum.
pub const BOUNDED_GROWTH: f64 = 1.0 + 1e-3;

/// Parameters of one integration.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousParams {
    /// Viscous damping, `alpha > 0`.
    pub alpha: f64,
    /// Hessian damping weight, `beta >= 0`.
    pub beta: f64,
    /// Quasar-convexity modulus, `kappa > 0`.
    pub kappa: f64,
    /// `2 alpha / (kappa + 2)`, derived by [`ContinuousParams::new`].
    pub lambda: f64,
    pub t_end: f64,
    pub dt: f64,
    pub x0: Vec<f64>,
    pub v0: Vec<f64>,
}

impl ContinuousParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        kappa: f64,
        t_end: f64,
        dt: f64,
        x0: Vec<f64>,
        v0: Vec<f64>,
    ) -> Result<Self> {
        let params = Self {
            alpha,
            beta,
            kappa,
            lambda: 2.0 * alpha / (kappa + 2.0),
            t_end,
            dt,
            x0,
            v0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha must be positive and finite"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta must be nonnegative and finite"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa must be positive and finite"));
        }
        if self.lambda != 2.0 * self.alpha / (self.kappa + 2.0) {
            return Err(Error::invalid("lambda must equal 2 alpha / (kappa + 2)"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt must be positive and finite"));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end must be finite and at least dt"));
        }
        if self.x0.len() != self.v0.len() {
            return Err(Error::invalid("x0 and v0 must have the same length"));
        }
        if !linalg::all_finite(&self.x0) || !linalg::all_finite(&self.v0) {
            return Err(Error::invalid("initial state must be finite"));
        }
        Ok(())
    }

    /// Exponential decay rate of the energy, `λκ/2`.
    pub fn decay_rate(&self) -> f64 {
        0.5 * self.lambda * self.kappa
    }

    /// Number of integration steps; the last one is shortened to land on `t_end`.
    pub fn steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }

    /// Time of record `i`.
    pub fn time(&self, i: usize) -> f64 {
        if i >= self.steps() {
            self.t_end
        } else {
            i as f64 * self.dt
        }
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Rk4,
}

impl Integrator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Integrator::Euler => "euler",
            Integrator::Rk4 => "rk4",
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(Error::invalid(format!("unknown integrator '{other}'"))),
        }
    }
}

/// State of the trajectory at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub x: Vec<f64>,
    /// Velocity `x'(t)`.
    pub v: Vec<f64>,
    /// `h(x) - h*`, or the raw value when `h*` is unknown.
    pub f_gap: f64,
    pub grad_norm: f64,
    /// Lyapunov energy; NaN when `x̄` or `h*` is unknown.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTrace {
    pub records: Vec<TrajectoryRecord>,
}

impl TrajectoryTrace {
    pub fn last(&self) -> &TrajectoryRecord {
        self.records
            .last()
            .expect("trajectory always holds the initial state")
    }
}

fn energy(
    meta: &FunctionMetadata,
    params: &ContinuousParams,
    value: f64,
    x: &[f64],
    v: &[f64],
    grad: &[f64],
) -> f64 {
    let (Some(x_bar), Some(h_star)) = (meta.minimizer.as_deref(), meta.min_value) else {
        return f64::NAN;
    };
    let mut w = linalg::scale(params.lambda, &linalg::sub(x, x_bar));
    linalg::axpy(1.0, v, &mut w);
    linalg::axpy(params.beta, grad, &mut w);
    value - h_star + 0.5 * linalg::norm_sq(&w)
}

fn make_record(
    problem: &TestProblem,
    params: &ContinuousParams,
    t: f64,
    x: Vec<f64>,
    v: Vec<f64>,
) -> Result<TrajectoryRecord> {
    let value = problem.value(&x)?;
    let grad = problem.gradient(&x)?;
    Ok(TrajectoryRecord {
        t,
        f_gap: problem.metadata.gap(value),
        grad_norm: linalg::norm(&grad),
        energy: energy(&problem.metadata, params, value, &x, &v, &grad),
        x,
        v,
    })
}

/// Right-hand side `(x', v')` of the first-order system.
fn vector_field(
    problem: &TestProblem,
    params: &ContinuousParams,
    x: &[f64],
    v: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let grad = problem.gradient(x)?;
    let mut acc = linalg::scale(-params.alpha, v);
    linalg::axpy(-1.0, &grad, &mut acc);
    if params.beta != 0.0 {
        let hv = hvp_or_fd(problem.objective.as_ref(), x, v)?;
        linalg::axpy(-params.beta, &hv, &mut acc);
    }
    Ok((v.to_vec(), acc))
}

fn shifted(base: &[f64], s: f64, dir: &[f64]) -> Vec<f64> {
    let mut out = base.to_vec();
    linalg::axpy(s, dir, &mut out);
    out
}

fn step(
    problem: &TestProblem,
    params: &ContinuousParams,
    method: Integrator,
    x: &[f64],
    v: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match method {
        Integrator::Euler => {
            let (dx, dv) = vector_field(problem, params, x, v)?;
            Ok((shifted(x, h, &dx), shifted(v, h, &dv)))
        }
        Integrator::Rk4 => {
            let (k1x, k1v) = vector_field(problem, params, x, v)?;
            let (k2x, k2v) = vector_field(
                problem,
                params,
                &shifted(x, 0.5 * h, &k1x),
                &shifted(v, 0.5 * h, &k1v),
            )?;
            let (k3x, k3v) = vector_field(
                problem,
                params,
                &shifted(x, 0.5 * h, &k2x),
                &shifted(v, 0.5 * h, &k2v),
            )?;
            let (k4x, k4v) =
                vector_field(problem, params, &shifted(x, h, &k3x), &shifted(v, h, &k3v))?;
            let combine =
                |base: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
                    (0..base.len())
                        .map(|i| base[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                        .collect()
                };
            Ok((
                combine(x, &k1x, &k2x, &k3x, &k4x),
                combine(v, &k1v, &k2v, &k3v, &k4v),
            ))
        }
    }
}

/// Integrate from `(x0, v0)` over `[0, t_end]`, recording every grid time.
///
/// A state that becomes non-finite or leaves the ball of radius
/// [`DIVERGENCE_LIMIT`] aborts with [`Error::NumericalDivergence`].
pub fn integrate(
    problem: &TestProblem,
    params: &ContinuousParams,
    method: Integrator,
) -> Result<TrajectoryTrace> {
    params.validate()?;
    if params.x0.len() != problem.dim() {
        return Err(Error::invalid(format!(
            "initial point has length {}, problem dimension is {}",
            params.x0.len(),
            problem.dim()
        )));
    }
    let n = params.steps();
    let mut records = Vec::with_capacity(n + 1);
    records.push(make_record(
        problem,
        params,
        0.0,
        params.x0.clone(),
        params.v0.clone(),
    )?);
    let (mut x, mut v) = (params.x0.clone(), params.v0.clone());
    for i in 1..=n {
        let h = params.time(i) - params.time(i - 1);
        let (nx, nv) = step(problem, params, method, &x, &v, h)?;
        let runaway = |s: &[f64]| !linalg::all_finite(s) || linalg::norm(s) > DIVERGENCE_LIMIT;
        if runaway(&nx) || runaway(&nv) {
            return Err(Error::NumericalDivergence { step: i });
        }
        x = nx;
        v = nv;
        let rec = make_record(problem, params, params.time(i), x.clone(), v.clone())?;
        if !rec.f_gap.is_finite() || !rec.grad_norm.is_finite() {
            return Err(Error::NumericalDivergence { step: i });
        }
        records.push(rec);
    }
    Ok(TrajectoryTrace { records })
}

/// The admissible ranges for exponential decay at a given modulus `γ`:
/// `alpha <= sqrt(γ (κ+2)² / (8κ))` and `0 < beta <= (κ+2)/(κ alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayConditions {
    pub alpha_max: f64,
    pub beta_max: f64,
    pub valid: bool,
    pub violations: Vec<String>,
}

pub fn decay_conditions(params: &ContinuousParams, gamma: f64) -> DecayConditions {
    let k = params.kappa;
    let mut violations = Vec::new();
    let alpha_max = if gamma > 0.0 {
        (gamma * (k + 2.0) * (k + 2.0) / (8.0 * k)).sqrt()
    } else {
        violations.push("missing_gamma".to_string());
        f64::NAN
    };
    let beta_max = (k + 2.0) / (k * params.alpha);
    if gamma > 0.0 && params.alpha > alpha_max {
        violations.push("alpha_above_bound".to_string());
    }
    if !(params.beta > 0.0) {
        violations.push("beta_not_positive".to_string());
    } else if params.beta > beta_max {
        violations.push("beta_above_bound".to_string());
    }
    DecayConditions {
        alpha_max,
        beta_max,
        valid: violations.is_empty(),
        violations,
    }
}

/// Outcome of checking the energy decay along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    /// Initial energy `C = E(0)`.
    pub c_const: f64,
    /// `max_t (h(x(t)) - h*) e^{λκt/2} - C`; should be `<= slack`.
    pub upper_margin: f64,
    /// `min_t h(x(t)) - h* - (γ/4)‖x(t) - x̄‖²`; should be `>= -slack`.
    pub lower_margin: f64,
    /// Largest relative increase of `E(t) e^{λκt/2}` between grid times.
    pub max_relative_increase: f64,
    /// `DECAY_SLACK * C`.
    pub slack: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
    pub monotone: bool,
    pub passed: bool,
}

impl Theorem1Report {
    pub fn to_record(&self) -> ReportRecord {
        ReportRecord::new("exponential_decay")
            .flag("passed", self.passed)
            .float("c", self.c_const)
            .float("upper_margin", self.upper_margin)
            .float("lower_margin", self.lower_margin)
            .float("max_relative_increase", self.max_relative_increase)
            .float("slack", self.slack)
            .flag("upper_ok", self.upper_ok)
            .flag("lower_ok", self.lower_ok)
            .flag("monotone", self.monotone)
    }
}

/// Check the sandwich `(γ/4)‖x - x̄‖² <= h(x) - h* <= C e^{-λκt/2}` and the
/// monotonicity of `E(t) e^{λκt/2}` on every record of `trace`.
pub fn check_theorem1(
    trace: &TrajectoryTrace,
    params: &ContinuousParams,
    meta: &FunctionMetadata,
) -> Result<Theorem1Report> {
    let gamma = meta
        .gamma()
        .ok_or_else(|| Error::invalid("decay check requires gamma"))?;
    let x_bar = meta
        .minimizer
        .as_deref()
        .ok_or_else(|| Error::invalid("decay check requires the minimizer"))?;
    if meta.min_value.is_none() {
        return Err(Error::invalid("decay check requires the minimum value"));
    }
    let first = trace
        .records
        .first()
        .ok_or_else(|| Error::invalid("empty trajectory"))?;
    if first.t != 0.0 {
        return Err(Error::invalid("trajectory must start at t = 0"));
    }
    let c_const = first.energy;
    if !c_const.is_finite() {
        return Err(Error::invalid("initial energy is not finite"));
    }
    let rate = params.decay_rate();
    let slack = DECAY_SLACK * c_const;
    let mut upper_margin = f64::NEG_INFINITY;
    let mut lower_margin = f64::INFINITY;
    let mut max_relative_increase = f64::NEG_INFINITY;
    let mut prev_weighted: Option<f64> = None;
    for rec in &trace.records {
        let growth = (rate * rec.t).exp();
        upper_margin = upper_margin.max(rec.f_gap * growth - c_const);
        lower_margin = lower_margin.min(rec.f_gap - 0.25 * gamma * linalg::dist_sq(&rec.x, x_bar));
        let weighted = rec.energy * growth;
        if let Some(prev) = prev_weighted {
            let increase = weighted - prev;
            let rel = if increase <= 0.0 {
                increase / prev.abs().max(f64::MIN_POSITIVE)
            } else if prev > 0.0 {
                increase / prev
            } else {
                f64::INFINITY
            };
            max_relative_increase = max_relative_increase.max(rel);
        }
        prev_weighted = Some(weighted);
    }
    if prev_weighted.is_some() && max_relative_increase == f64::NEG_INFINITY {
        max_relative_increase = 0.0;
    }
    let upper_ok = upper_margin <= slack;
    let lower_ok = lower_margin >= -slack;
    let monotone = max_relative_increase <= DECAY_SLACK;
    Ok(Theorem1Report {
        c_const,
        upper_margin,
        lower_margin,
        max_relative_increase,
        slack,
        upper_ok,
        lower_ok,
        monotone,
        passed: upper_ok && lower_ok && monotone,
    })
}

/// Which weighted-integral bound applies, selected by `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaRegime {
    /// `κ > 2`: `∫₀ᵗ e^{λs} f ds` stays bounded.
    AboveTwo,
    /// `κ = 2`: `e^{-λt} ∫₀ᵗ e^{λs} f ds = O((1 + t) e^{-λt})`.
    Two,
    /// `κ ∈ [1, 2)`: `e^{-λt} ∫₀ᵗ e^{λs} f ds = O(e^{-λκt/2})`.
    OneToTwo,
    /// `κ ∈ (0, 1)`: `e^{-λκt} ∫₀ᵗ e^{λκs} f ds = O(e^{-λκt/2})`.
    BelowOne,
}

impl KappaRegime {
    pub fn from_kappa(kappa: f64) -> Self {
        if kappa > 2.0 {
            KappaRegime::AboveTwo
        } else if kappa == 2.0 {
            KappaRegime::Two
        } else if kappa >= 1.0 {
            KappaRegime::OneToTwo
        } else {
            KappaRegime::BelowOne
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            KappaRegime::AboveTwo => "(2,inf)",
            KappaRegime::Two => "2",
            KappaRegime::OneToTwo => "[1,2)",
            KappaRegime::BelowOne => "(0,1)",
        }
    }

    /// Exponent `r` of the weight `e^{rs}` inside the integral.
    fn weight_rate(&self, params: &ContinuousParams) -> f64 {
        match self {
            KappaRegime::BelowOne => params.lambda * params.kappa,
            _ => params.lambda,
        }
    }
}

/// One weighted integral along the trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSeries {
    /// Quantity whose decay the regime predicts, at every record time.
    pub values: Vec<f64>,
    /// `values` divided by the predicted decay shape.
    pub ratios: Vec<f64>,
    /// Fitted constant: the largest ratio observed.
    pub c_tilde: f64,
    /// Whether the ratio stopped growing, see [`BOUNDED_GROWTH`].
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralReport {
    pub regime: KappaRegime,
    pub times: Vec<f64>,
    /// Integrand `‖∇h(x(s))‖²`.
    pub gradient: IntegralSeries,
    /// Integrand `‖x'(s)‖²`.
    pub velocity: IntegralSeries,
}

impl IntegralReport {
    pub fn bounded(&self) -> bool {
        self.gradient.bounded && self.velocity.bounded
    }

    pub fn to_record(&self) -> ReportRecord {
        ReportRecord::new("weighted_integrals")
            .flag("passed", self.bounded())
            .text("regime", self.regime.label())
            .float("t_end", *self.times.last().unwrap_or(&0.0))
            .float(
                "gradient_final",
                *self.gradient.values.last().unwrap_or(&0.0),
            )
            .float("gradient_c_tilde", self.gradient.c_tilde)
            .flag("gradient_bounded", self.gradient.bounded)
            .float(
                "velocity_final",
                *self.velocity.values.last().unwrap_or(&0.0),
            )
            .float("velocity_c_tilde", self.velocity.c_tilde)
            .flag("velocity_bounded", self.velocity.bounded)
    }
}

fn integral_series(
    times: &[f64],
    integrand: &[f64],
    regime: KappaRegime,
    params: &ContinuousParams,
) -> IntegralSeries {
    let r = regime.weight_rate(params);
    let decay = params.decay_rate();
    // j tracks e^{-rt} ∫₀ᵗ e^{rs} f ds, updated with the trapezoid rule in a
    // form that never forms the growing weight explicitly.
    let mut j = 0.0;
    let mut values = Vec::with_capacity(times.len());
    let mut ratios = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        if i > 0 {
            let h = times[i] - times[i - 1];
            let damp = (-r * h).exp();
            j = damp * j + 0.5 * h * (damp * integrand[i - 1] + integrand[i]);
        }
        let t = times[i];
        let (value, ratio) = match regime {
            KappaRegime::AboveTwo => {
                let plain = j * (r * t).exp();
                (plain, plain)
            }
            KappaRegime::Two => (j, j * (r * t).exp() / (1.0 + t)),
            KappaRegime::OneToTwo | KappaRegime::BelowOne => (j, j * (decay * t).exp()),
        };
        values.push(value);
        ratios.push(ratio);
    }
    let c_tilde = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let split = (3 * ratios.len() / 4).max(1);
    let head = ratios[..split]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let tail = ratios[split..]
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let finite = ratios.iter().all(|r| r.is_finite());
    let bounded = finite && (tail <= BOUNDED_GROWTH * head || tail <= head);
    IntegralSeries {
        values,
        ratios,
        c_tilde,
        bounded,
    }
}

/// Trapezoidal estimates of the weighted integrals of `‖∇h(x)‖²` and `‖x'‖²`
/// in the form matching the regime of `params.kappa`, normalized by the
/// predicted decay.
pub fn corollary1_integrals(
    trace: &TrajectoryTrace,
    params: &ContinuousParams,
) -> Result<IntegralReport> {
    if trace.records.len() < 2 {
        return Err(Error::invalid(
            "integral diagnostics need at least two records",
        ));
    }
    let regime = KappaRegime::from_kappa(params.kappa);
    let times: Vec<f64> = trace.records.iter().map(|r| r.t).collect();
    let grad_sq: Vec<f64> = trace
        .records
        .iter()
        .map(|r| r.grad_norm * r.grad_norm)
        .collect();
    let vel_sq: Vec<f64> = trace
        .records
        .iter()
        .map(|r| linalg::norm_sq(&r.v))
        .collect();
    Ok(IntegralReport {
        regime,
        gradient: integral_series(&times, &grad_sq, regime, params),
        velocity: integral_series(&times, &vel_sq, regime, params),
        times,
    })
}
