use crate::error::{Error, Result};
use crate::functions::TestProblem;
use crate::linalg;
use crate::objective::FunctionMetadata;
use crate::solvers::certificate::{nesterov_mu, HeavyBallParams, NesterovParams};
use crate::trace::{IterationRecord, IterationTrace, StoppingRule, Termination};

/// Iterates whose norm or objective magnitude exceed this abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Where the gradient step is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GradientPoint {
    /// At the current iterate (Heavy Ball).
    Current,
    /// At the extrapolated point (Nesterov).
    Extrapolated,
}

/// State visible to an energy functional after a step.
struct EnergyInput<'a> {
    x: &'a [f64],
    x_prev: &'a [f64],
    grad_prev: &'a [f64],
    value: f64,
}

type Energy<'a> = dyn Fn(&EnergyInput) -> f64 + 'a;

fn diverging_point(x: &[f64]) -> bool {
    !linalg::all_finite(x) || linalg::norm(x) > DIVERGENCE_LIMIT
}

fn diverging_value(value: f64, grad: &[f64]) -> bool {
    !value.is_finite() || value.abs() > DIVERGENCE_LIMIT || !linalg::all_finite(grad)
}

fn check_init(problem: &TestProblem, init: &[f64], stop: &StoppingRule) -> Result<()> {
    stop.validate()?;
    if init.len() != problem.dim() {
        return Err(Error::invalid(format!(
            "initial point has length {}, problem dimension is {}",
            init.len(),
            problem.dim()
        )));
    }
    if !linalg::all_finite(init) {
        return Err(Error::invalid("initial point must be finite"));
    }
    Ok(())
}

fn record(
    k: usize,
    x: &[f64],
    value: f64,
    grad: &[f64],
    step_norm: f64,
    energy: f64,
    meta: &FunctionMetadata,
) -> IterationRecord {
    IterationRecord {
        k,
        x: x.to_vec(),
        f_gap: meta.gap(value),
        grad_norm: linalg::norm(grad),
        step_norm,
        energy,
    }
}

/// `y_k = x_k + alpha (x_k - x_{k-1}) - theta (g(x_k) - g(x_{k-1}))`,
/// `x_{k+1} = y_k - beta g(p_k)` with `p_k` either `x_k` or `y_k`, starting
/// from `x_{-1} = x_0`.
#[allow(clippy::too_many_arguments)]
fn momentum_run(
    problem: &TestProblem,
    alpha: f64,
    theta: f64,
    beta: f64,
    at: GradientPoint,
    energy: &Energy,
    init: &[f64],
    stop: &StoppingRule,
) -> Result<IterationTrace> {
    check_init(problem, init, stop)?;
    let meta = &problem.metadata;
    let n = init.len();

    let mut x = init.to_vec();
    let mut value = problem.value(&x)?;
    let mut grad = problem.gradient(&x)?;
    if diverging_value(value, &grad) {
        return Err(Error::NumericalDivergence { step: 0 });
    }
    let mut x_prev = x.clone();
    let mut grad_prev = grad.clone();

    let e0 = energy(&EnergyInput {
        x: &x,
        x_prev: &x_prev,
        grad_prev: &grad_prev,
        value,
    });
    let mut records = vec![record(0, &x, value, &grad, 0.0, e0, meta)];
    if let Some(t) = stop.check(&records[0]) {
        return Ok(IterationTrace {
            records,
            termination: t,
        });
    }

    let mut k = 0;
    let termination = loop {
        k += 1;
        let mut y = x.clone();
        if alpha != 0.0 {
            for i in 0..n {
                y[i] += alpha * (x[i] - x_prev[i]);
            }
        }
        if theta != 0.0 {
            for i in 0..n {
                y[i] -= theta * (grad[i] - grad_prev[i]);
            }
        }
        let lookahead;
        let direction = match at {
            GradientPoint::Current => &grad,
            GradientPoint::Extrapolated => {
                if diverging_point(&y) {
                    break Termination::Diverged { step: k };
                }
                lookahead = problem.gradient(&y)?;
                &lookahead
            }
        };
        let x_next: Vec<f64> = y
            .iter()
            .zip(direction)
            .map(|(yi, di)| yi - beta * di)
            .collect();
        if diverging_point(&x_next) {
            break Termination::Diverged { step: k };
        }
        let value_next = problem.value(&x_next)?;
        let grad_next = problem.gradient(&x_next)?;
        if diverging_value(value_next, &grad_next) {
            break Termination::Diverged { step: k };
        }

        x_prev = std::mem::replace(&mut x, x_next);
        grad_prev = std::mem::replace(&mut grad, grad_next);
        value = value_next;

        let e = energy(&EnergyInput {
            x: &x,
            x_prev: &x_prev,
            grad_prev: &grad_prev,
            value,
        });
        let rec = record(k, &x, value, &grad, linalg::dist(&x, &x_prev), e, meta);
        let done = stop.check(&rec);
        records.push(rec);
        if let Some(t) = done {
            break t;
        }
    };
    Ok(IterationTrace {
        records,
        termination,
    })
}

fn check_heavy_ball(params: &HeavyBallParams) -> Result<()> {
    let HeavyBallParams { alpha, theta, beta } = *params;
    if !(alpha >= 0.0 && theta >= 0.0 && beta > 0.0) {
        return Err(Error::invalid(format!(
            "heavy ball requires alpha >= 0, theta >= 0, beta > 0 (got {alpha}, {theta}, {beta})"
        )));
    }
    Ok(())
}

fn check_nesterov(params: &NesterovParams) -> Result<()> {
    let NesterovParams {
        alpha,
        theta,
        beta,
        eta,
        epsilon,
    } = *params;
    if !((0.0..=1.0).contains(&alpha) && theta >= 0.0 && beta > 0.0 && eta > 1.0 && epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "nesterov requires alpha in [0,1], theta >= 0, beta > 0, eta > 1, epsilon > 0 \
             (got {alpha}, {theta}, {beta}, {eta}, {epsilon})"
        )));
    }
    Ok(())
}

/// Heavy Ball with Hessian correction. The energy field holds
/// `h(x_k) - h* + alpha^2/(theta+beta) ||x_k - x_{k-1}||^2 + theta^2/(theta+beta) ||grad h(x_{k-1})||^2`,
/// NaN when `h*` is unknown.
///
/// Parameters are not certified here; see
/// [`validate_heavy_ball`](crate::solvers::validate_heavy_ball).
pub fn heavy_ball_hessian(
    problem: &TestProblem,
    params: &HeavyBallParams,
    init: &[f64],
    stop: &StoppingRule,
) -> Result<IterationTrace> {
    check_heavy_ball(params)?;
    let HeavyBallParams { alpha, theta, beta } = *params;
    let s = theta + beta;
    let h_star = problem.metadata.min_value;
    let energy = move |e: &EnergyInput| match h_star {
        Some(h_star) => {
            e.value - h_star
                + alpha * alpha / s * linalg::dist_sq(e.x, e.x_prev)
                + theta * theta / s * linalg::norm_sq(e.grad_prev)
        }
        None => f64::NAN,
    };
    momentum_run(
        problem,
        alpha,
        theta,
        beta,
        GradientPoint::Current,
        &energy,
        init,
        stop,
    )
}

/// Classical Heavy Ball; `params.theta` must be zero.
pub fn heavy_ball(
    problem: &TestProblem,
    params: &HeavyBallParams,
    init: &[f64],
    stop: &StoppingRule,
) -> Result<IterationTrace> {
    if params.theta != 0.0 {
        return Err(Error::invalid("heavy_ball takes theta = 0"));
    }
    heavy_ball_hessian(problem, params, init, stop)
}

/// Nesterov's method with Hessian correction; the gradient step is taken at
/// the extrapolated point. The energy field holds
/// `||x_k - x̄||^2 + mu2 (1 - (alpha + theta L)) ||x_k - x_{k-1}||^2`,
/// NaN unless the minimizer, `gamma` and `L` are known.
pub fn nesterov_hessian(
    problem: &TestProblem,
    params: &NesterovParams,
    init: &[f64],
    stop: &StoppingRule,
) -> Result<IterationTrace> {
    check_nesterov(params)?;
    let NesterovParams {
        alpha,
        theta,
        beta,
        eta,
        ..
    } = *params;
    let meta = &problem.metadata;
    let weight = match (meta.gamma(), meta.lipschitz(), meta.minimizer.as_ref()) {
        (Some(gamma), Some(l), Some(_)) => {
            let (_, mu2) = nesterov_mu(beta, eta, gamma, l);
            Some(mu2 * (1.0 - (alpha + theta * l)))
        }
        _ => None,
    };
    let xbar = meta.minimizer.clone();
    let energy = move |e: &EnergyInput| match (weight, &xbar) {
        (Some(w), Some(xbar)) => linalg::dist_sq(e.x, xbar) + w * linalg::dist_sq(e.x, e.x_prev),
        _ => f64::NAN,
    };
    momentum_run(
        problem,
        alpha,
        theta,
        beta,
        GradientPoint::Extrapolated,
        &energy,
        init,
        stop,
    )
}

/// Classical Nesterov momentum; `params.theta` must be zero.
pub fn nesterov(
    problem: &TestProblem,
    params: &NesterovParams,
    init: &[f64],
    stop: &StoppingRule,
) -> Result<IterationTrace> {
    if params.theta != 0.0 {
        return Err(Error::invalid("nesterov takes theta = 0"));
    }
    nesterov_hessian(problem, params, init, stop)
}

/// Plain gradient descent `x_{k+1} = x_k - beta grad h(x_k)`. The energy
/// field holds `h(x_k) - h*`.
pub fn gradient_descent(
    problem: &TestProblem,
    beta: f64,
    init: &[f64],
    stop: &StoppingRule,
) -> Result<IterationTrace> {
    if !(beta > 0.0) {
        return Err(Error::invalid("step size must be positive"));
    }
    check_init(problem, init, stop)?;
    let meta = &problem.metadata;
    let energy = |value: f64| meta.min_value.map_or(f64::NAN, |h| value - h);

    let mut x = init.to_vec();
    let mut value = problem.value(&x)?;
    let mut grad = problem.gradient(&x)?;
    if diverging_value(value, &grad) {
        return Err(Error::NumericalDivergence { step: 0 });
    }
    let mut records = vec![record(0, &x, value, &grad, 0.0, energy(value), meta)];
    if let Some(t) = stop.check(&records[0]) {
        return Ok(IterationTrace {
            records,
            termination: t,
        });
    }
    let mut k = 0;
    let termination = loop {
        k += 1;
        let x_next: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi - beta * gi).collect();
        if diverging_point(&x_next) {
            break Termination::Diverged { step: k };
        }
        let value_next = problem.value(&x_next)?;
        let grad_next = problem.gradient(&x_next)?;
        if diverging_value(value_next, &grad_next) {
            break Termination::Diverged { step: k };
        }
        let step = linalg::dist(&x_next, &x);
        x = x_next;
        grad = grad_next;
        value = value_next;
        let rec = record(k, &x, value, &grad, step, energy(value), meta);
        let done = stop.check(&rec);
        records.push(rec);
        if let Some(t) = done {
            break t;
        }
    };
    Ok(IterationTrace {
        records,
        termination,
    })
}
