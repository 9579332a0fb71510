//! Discrete momentum methods and their convergence certificates.

mod certificate;
mod methods;

pub use certificate::{
    default_epsilon, nesterov_momentum_bound, nesterov_mu, validate_heavy_ball, validate_nesterov,
    HeavyBallCertificate, HeavyBallParams, NesterovCertificate, NesterovParams, Violation,
};
pub use methods::{
    gradient_descent, heavy_ball, heavy_ball_hessian, nesterov, nesterov_hessian, DIVERGENCE_LIMIT,
};
