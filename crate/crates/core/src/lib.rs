//! Heavy Ball and Nesterov methods with Hessian correction for strongly
//! quasiconvex objectives, the Hessian-driven damping ODE they discretize,
//! and sampling-based checks of the structural assumptions behind their
//! linear and exponential rates.
//!
//! Modules:
//!
//! * [`objective`]: the objective trait, metadata, finite-difference oracles.
//! * [`functions`]: test problems and modulus-preserving combinators.
//! * [`solvers`]: the discrete methods and their rate certificates.
//! * [`continuous`]: integration of the damped second-order system.
//! * [`analysis`]: property checkers and the quasar-convexity estimator.

// `!(x > 0.0)` style guards are deliberate: they reject NaN along with
// out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod continuous;
pub mod error;
pub mod functions;
pub mod linalg;
pub mod objective;
pub mod record;
pub mod solvers;
pub mod trace;

pub use error::{Error, Result};
pub use functions::TestProblem;
pub use objective::{FunctionMetadata, Objective};
pub use trace::{IterationRecord, IterationTrace, StoppingRule, Termination};

pub use nalgebra::{DMatrix, DVector};
