//! Iteration records, stopping rules and traces produced by the solvers.

use crate::error::{Error, Result};

/// One iterate of a discrete method.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    /// `h(x_k) - h*` when `h*` is known, raw `h(x_k)` otherwise.
    pub f_gap: f64,
    pub grad_norm: f64,
    /// `||x_k - x_{k-1}||`, zero for the initial record.
    pub step_norm: f64,
    /// Lyapunov energy of the method, NaN when a required constant is unknown.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRule {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub step_tol: Option<f64>,
    /// Stop once `f_gap <= gap_tol`.
    pub gap_tol: Option<f64>,
}

impl StoppingRule {
    pub fn new(grad_tol: f64, max_iters: usize) -> Self {
        StoppingRule {
            grad_tol,
            max_iters,
            step_tol: None,
            gap_tol: None,
        }
    }

    pub fn with_step_tol(mut self, tol: f64) -> Self {
        self.step_tol = Some(tol);
        self
    }

    pub fn with_gap_tol(mut self, tol: f64) -> Self {
        self.gap_tol = Some(tol);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::invalid("grad_tol must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if let Some(t) = self.step_tol {
            if !(t >= 0.0) {
                return Err(Error::invalid("step_tol must be nonnegative"));
            }
        }
        Ok(())
    }

    /// Reason to stop after recording `rec`, if any.
    pub fn check(&self, rec: &IterationRecord) -> Option<Termination> {
        if rec.grad_norm <= self.grad_tol {
            return Some(Termination::GradientTolerance);
        }
        if let Some(tol) = self.gap_tol {
            if rec.f_gap <= tol {
                return Some(Termination::GapTolerance);
            }
        }
        if rec.k > 0 {
            if let Some(tol) = self.step_tol {
                if rec.step_norm <= tol {
                    return Some(Termination::StepTolerance);
                }
            }
        }
        if rec.k >= self.max_iters {
            return Some(Termination::MaxIterations);
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    GapTolerance,
    MaxIterations,
    /// Non-finite or exploding iterate; the offending step is not recorded.
    Diverged {
        step: usize,
    },
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::GradientTolerance => "grad_tol",
            Termination::StepTolerance => "step_tol",
            Termination::GapTolerance => "gap_tol",
            Termination::MaxIterations => "max_iters",
            Termination::Diverged { .. } => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl IterationTrace {
    pub fn last(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("trace always holds the initial record")
    }

    /// Number of iterations performed (records minus the initial one).
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn diverged(&self) -> bool {
        matches!(self.termination, Termination::Diverged { .. })
    }

    /// `Err(NumericalDivergence)` for diverged runs.
    pub fn ensure_converging(&self) -> Result<&Self> {
        match self.termination {
            Termination::Diverged { step } => Err(Error::NumericalDivergence { step }),
            _ => Ok(self),
        }
    }

    /// Sign changes of coordinate `coord` of `x_k - center`. Exact zeros are
    /// skipped.
    pub fn sign_changes(&self, coord: usize, center: &[f64]) -> usize {
        count_sign_changes(self.records.iter().map(|r| r.x[coord] - center[coord]))
    }
}

pub fn count_sign_changes(values: impl IntoIterator<Item = f64>) -> usize {
    let mut last: Option<bool> = None;
    let mut changes = 0;
    for v in values {
        if v == 0.0 || v.is_nan() {
            continue;
        }
        let positive = v > 0.0;
        if let Some(prev) = last {
            if prev != positive {
                changes += 1;
            }
        }
        last = Some(positive);
    }
    changes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: usize, grad_norm: f64, step_norm: f64, f_gap: f64) -> IterationRecord {
        IterationRecord {
            k,
            x: vec![0.0],
            f_gap,
            grad_norm,
            step_norm,
            energy: f64::NAN,
        }
    }

    #[test]
    fn stopping_rule_validation() {
        assert!(StoppingRule::new(0.0, 10).validate().is_err());
        assert!(StoppingRule::new(1e-6, 0).validate().is_err());
        assert!(StoppingRule::new(1e-6, 1).validate().is_ok());
    }

    #[test]
    fn step_tol_ignored_at_start() {
        let stop = StoppingRule::new(1e-9, 10).with_step_tol(1e-3);
        assert_eq!(stop.check(&rec(0, 1.0, 0.0, 1.0)), None);
        assert_eq!(
            stop.check(&rec(3, 1.0, 1e-4, 1.0)),
            Some(Termination::StepTolerance)
        );
    }

    #[test]
    fn gradient_tolerance_wins_over_max_iters() {
        let stop = StoppingRule::new(1e-6, 5).with_gap_tol(1e-8);
        assert_eq!(
            stop.check(&rec(5, 1e-7, 1.0, 1.0)),
            Some(Termination::GradientTolerance)
        );
        assert_eq!(
            stop.check(&rec(5, 1.0, 1.0, 1e-9)),
            Some(Termination::GapTolerance)
        );
        assert_eq!(
            stop.check(&rec(5, 1.0, 1.0, 1.0)),
            Some(Termination::MaxIterations)
        );
    }

    #[test]
    fn sign_changes_skip_zeros() {
        assert_eq!(count_sign_changes([1.0, 0.0, 2.0, -1.0, 0.0, -3.0, 4.0]), 2);
        assert_eq!(count_sign_changes([3.0, 2.0, 1.0, 0.5]), 0);
        assert_eq!(count_sign_changes(std::iter::empty()), 0);
    }
}
