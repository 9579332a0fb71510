//! Parameter bundles and certified linear rates for the momentum methods.

use std::fmt;

use crate::objective::FunctionMetadata;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeavyBallParams {
    /// Momentum weight.
    pub alpha: f64,
    /// Weight of the gradient-difference (Hessian) correction.
    pub theta: f64,
    /// Step size.
    pub beta: f64,
}

impl HeavyBallParams {
    pub fn new(alpha: f64, theta: f64, beta: f64) -> Self {
        HeavyBallParams { alpha, theta, beta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NesterovParams {
    pub alpha: f64,
    pub theta: f64,
    pub beta: f64,
    /// Only used for certification and the energy; must exceed 1.
    pub eta: f64,
    /// Only used for certification; must be positive.
    pub epsilon: f64,
}

impl NesterovParams {
    pub fn new(alpha: f64, theta: f64, beta: f64, eta: f64, epsilon: f64) -> Self {
        NesterovParams {
            alpha,
            theta,
            beta,
            eta,
            epsilon,
        }
    }
}

/// A condition of a convergence theorem that a parameter set fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Violation {
    MissingConstants,
    /// Heavy Ball: `alpha` outside `[0, sqrt(2)/2)`.
    AlphaRange,
    /// Heavy Ball: `theta` outside `[0, alpha / (L sqrt 3))`.
    ThetaRange,
    /// Heavy Ball: `beta <= theta (sqrt 2 - 1)`.
    BetaLowerBound,
    /// Heavy Ball: `theta + beta` outside `(0, (1 - 2 alpha^2) / L]`.
    StepSumRange,
    /// Heavy Ball: `alpha^2 - 3 theta^2 L^2 <= 0`, sigma undefined.
    SigmaUndefined,
    RhoNotPositive,
    RhoNotBelowSigma,
    /// Nesterov: `beta` outside `(0, gamma / (eta L^2))`.
    BetaUpperBound,
    /// Nesterov: `eta <= 1`.
    EtaRange,
    /// Nesterov: `epsilon` outside `(0, 1/mu1 - 1)`.
    EpsilonRange,
    /// Nesterov: `alpha + theta L` above the admissible bound, or `alpha`
    /// outside `[0, 1]` or `theta < 0`.
    MomentumBound,
}

impl Violation {
    /// Stable identifier without spaces, for machine-readable records.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::MissingConstants => "missing_constants",
            Violation::AlphaRange => "alpha_range",
            Violation::ThetaRange => "theta_range",
            Violation::BetaLowerBound => "beta_lower_bound",
            Violation::StepSumRange => "step_sum_range",
            Violation::SigmaUndefined => "sigma_undefined",
            Violation::RhoNotPositive => "rho_not_positive",
            Violation::RhoNotBelowSigma => "rho_not_below_sigma",
            Violation::BetaUpperBound => "beta_upper_bound",
            Violation::EtaRange => "eta_range",
            Violation::EpsilonRange => "epsilon_range",
            Violation::MomentumBound => "momentum_bound",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Violation::MissingConstants => "missing constants",
            Violation::AlphaRange => "alpha ≥ √2/2",
            Violation::ThetaRange => "θ ≥ α/(L√3)",
            Violation::BetaLowerBound => "β ≤ θ(√2−1)",
            Violation::StepSumRange => "θ+β > (1−2α²)/L",
            Violation::SigmaUndefined => "α² ≤ 3θ²L²",
            Violation::RhoNotPositive => "ρ ≤ 0",
            Violation::RhoNotBelowSigma => "ρ ≥ σ",
            Violation::BetaUpperBound => "beta upper bound",
            Violation::EtaRange => "η ≤ 1",
            Violation::EpsilonRange => "epsilon range",
            Violation::MomentumBound => "α+θL above momentum bound",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyBallCertificate {
    pub valid: bool,
    pub rho: f64,
    pub sigma: f64,
    /// Per-step energy factor `1 - rho/sigma`.
    pub contraction: f64,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NesterovCertificate {
    pub valid: bool,
    pub mu1: f64,
    pub mu2: f64,
    /// Per-step energy factor `mu1 (1 + epsilon)`.
    pub rate: f64,
    /// Largest admissible `alpha + theta L`.
    pub momentum_bound: f64,
    pub violations: Vec<Violation>,
}

/// Terms of the form `12 alpha^2 / (alpha^2 - 3 theta^2 L^2)` in sigma.
/// Continuously extended by 0 at `alpha = theta = 0`.
fn alpha_ratio(alpha: f64, theta: f64, l: f64) -> Option<f64> {
    if alpha == 0.0 && theta == 0.0 {
        return Some(0.0);
    }
    let denom = alpha * alpha - 3.0 * theta * theta * l * l;
    (denom > 0.0).then(|| alpha * alpha / denom)
}

/// Checks the Heavy Ball parameter region and computes `rho`, `sigma` and
/// the contraction `1 - rho/sigma` of the energy
/// `h(x_k) - h* + alpha^2/(theta+beta) ||x_k - x_{k-1}||^2 + theta^2/(theta+beta) ||grad h(x_{k-1})||^2`.
///
/// Never fails; every unmet condition is listed in `violations`.
pub fn validate_heavy_ball(
    params: &HeavyBallParams,
    meta: &FunctionMetadata,
) -> HeavyBallCertificate {
    let HeavyBallParams { alpha, theta, beta } = *params;
    let (gamma, l) = match (meta.gamma(), meta.lipschitz()) {
        (Some(g), Some(l)) => (g, l),
        _ => {
            return HeavyBallCertificate {
                valid: false,
                rho: f64::NAN,
                sigma: f64::NAN,
                contraction: f64::NAN,
                violations: vec![Violation::MissingConstants],
            }
        }
    };

    let mut violations = Vec::new();
    let sqrt2 = std::f64::consts::SQRT_2;
    if !(alpha >= 0.0 && alpha < sqrt2 / 2.0) {
        violations.push(Violation::AlphaRange);
    }
    // theta = 0 is admitted even when alpha = 0: the interval [0, 0) is
    // empty, but the alpha = theta = 0 limit of sigma is finite.
    if !(theta == 0.0 || (theta > 0.0 && theta < alpha / (l * 3f64.sqrt()))) {
        violations.push(Violation::ThetaRange);
    }
    if !(beta > theta * (sqrt2 - 1.0)) {
        violations.push(Violation::BetaLowerBound);
    }
    let s = theta + beta;
    if !(s > 0.0 && s <= (1.0 - 2.0 * alpha * alpha) / l) {
        violations.push(Violation::StepSumRange);
    }

    let rho = (s / 2.0 - theta * theta / s).min((1.0 - s * l - 2.0 * alpha * alpha) / (2.0 * s));
    let sigma = match alpha_ratio(alpha, theta, l) {
        Some(r) => {
            let first = (3.0 + 12.0 * r) / s;
            let second = 2.0 * l / (gamma * gamma) + 3.0 * s + 12.0 * r * beta * beta / s;
            first.max(second)
        }
        None => {
            violations.push(Violation::SigmaUndefined);
            f64::NAN
        }
    };
    if !(rho > 0.0) {
        violations.push(Violation::RhoNotPositive);
    }
    if sigma.is_finite() && !(rho < sigma) {
        violations.push(Violation::RhoNotBelowSigma);
    }
    HeavyBallCertificate {
        valid: violations.is_empty(),
        rho,
        sigma,
        contraction: 1.0 - rho / sigma,
        violations,
    }
}

/// `(mu1, mu2)` for step `beta` and splitting weight `eta`.
pub fn nesterov_mu(beta: f64, eta: f64, gamma: f64, l: f64) -> (f64, f64) {
    let denom = 1.0 + beta * (gamma - eta * beta * l * l);
    (1.0 / denom, (1.0 - 1.0 / eta) / denom)
}

/// Largest `alpha + theta L` for which the Nesterov energy
/// `||x_k - x̄||^2 + mu2 (1 - (alpha + theta L)) ||x_k - x_{k-1}||^2`
/// contracts by `mu1 (1 + epsilon)`.
pub fn nesterov_momentum_bound(mu1: f64, mu2: f64, epsilon: f64) -> f64 {
    let top = mu1 * mu2 * (1.0 + epsilon);
    top / (top + mu1 + mu1 / epsilon + mu2)
}

/// Midpoint of the admissible epsilon interval `(0, 1/mu1 - 1)`.
pub fn default_epsilon(mu1: f64) -> f64 {
    0.5 * (1.0 / mu1 - 1.0)
}

/// Checks the Nesterov step, splitting and momentum conditions and
/// computes the certified rate `q = mu1 (1 + epsilon)`.
pub fn validate_nesterov(params: &NesterovParams, meta: &FunctionMetadata) -> NesterovCertificate {
    let NesterovParams {
        alpha,
        theta,
        beta,
        eta,
        epsilon,
    } = *params;
    let (gamma, l) = match (meta.gamma(), meta.lipschitz()) {
        (Some(g), Some(l)) => (g, l),
        _ => {
            return NesterovCertificate {
                valid: false,
                mu1: f64::NAN,
                mu2: f64::NAN,
                rate: f64::NAN,
                momentum_bound: f64::NAN,
                violations: vec![Violation::MissingConstants],
            }
        }
    };
    let mut violations = Vec::new();
    if !(eta > 1.0) {
        violations.push(Violation::EtaRange);
    }
    if !(beta > 0.0 && beta < gamma / (eta * l * l)) {
        violations.push(Violation::BetaUpperBound);
    }
    let (mu1, mu2) = nesterov_mu(beta, eta, gamma, l);
    if !(epsilon > 0.0 && epsilon < 1.0 / mu1 - 1.0) {
        violations.push(Violation::EpsilonRange);
    }
    let momentum_bound = nesterov_momentum_bound(mu1, mu2, epsilon);
    let momentum = alpha + theta * l;
    if !((0.0..=1.0).contains(&alpha) && theta >= 0.0 && momentum <= momentum_bound) {
        violations.push(Violation::MomentumBound);
    }
    NesterovCertificate {
        valid: violations.is_empty(),
        mu1,
        mu2,
        rate: mu1 * (1.0 + epsilon),
        momentum_bound,
        violations,
    }
}
