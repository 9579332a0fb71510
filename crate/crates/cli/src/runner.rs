//! Executing experiments: certificate verdicts, solver runs, CSV traces and
//! the one-line summaries.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tempfile::NamedTempFile;

use hessdamp::analysis::{check_named, DEFAULT_SAMPLES};
use hessdamp::continuous::{check_theorem1, corollary1_integrals, decay_conditions, integrate};
use hessdamp::record::{format_float, ReportRecord};
use hessdamp::solvers::{
    gradient_descent, heavy_ball, heavy_ball_hessian, nesterov, nesterov_hessian,
    validate_heavy_ball, validate_nesterov, HeavyBallParams,
};
use hessdamp::trace::count_sign_changes;
use hessdamp::{linalg, IterationTrace};

use crate::config::{ExperimentConfig, Method, MethodParams};
use crate::error::RunError;

/// Verdict of the convergence theorem matching the experiment's method.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub valid: bool,
    pub violations: Vec<String>,
    /// Per-step energy factor for discrete methods, exponential decay rate
    /// `λκ/2` for the ODE; NaN when it cannot be computed.
    pub rate: f64,
}

/// Certificate for the experiment's parameters. Gradient descent is
/// certified as Heavy Ball with `alpha = theta = 0`.
pub fn certify(config: &ExperimentConfig) -> Certificate {
    let meta = &config.problem.metadata;
    match &config.params {
        MethodParams::Gd { beta } => {
            let c = validate_heavy_ball(&HeavyBallParams::new(0.0, 0.0, *beta), meta);
            Certificate {
                valid: c.valid,
                violations: c.violations.iter().map(|v| v.code().to_string()).collect(),
                rate: c.contraction,
            }
        }
        MethodParams::HeavyBall(p) => {
            let c = validate_heavy_ball(p, meta);
            Certificate {
                valid: c.valid,
                violations: c.violations.iter().map(|v| v.code().to_string()).collect(),
                rate: c.contraction,
            }
        }
        MethodParams::Nesterov(p) => {
            let c = validate_nesterov(p, meta);
            Certificate {
                valid: c.valid,
                violations: c.violations.iter().map(|v| v.code().to_string()).collect(),
                rate: c.rate,
            }
        }
        MethodParams::Ode { params, .. } => {
            let c = decay_conditions(params, meta.gamma);
            Certificate {
                valid: c.valid,
                violations: c.violations,
                rate: params.decay_rate(),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Diverged,
    RejectedByCertificate,
    Failed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::Diverged => "diverged",
            RunStatus::RejectedByCertificate => "rejected-by-certificate",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub problem: String,
    pub method: Method,
    pub status: RunStatus,
    /// How the run stopped, e.g. `grad_tol` or `t_end`.
    pub termination: Option<String>,
    pub iterations: usize,
    pub final_f_gap: f64,
    pub final_grad_norm: f64,
    pub certificate: Certificate,
    /// Sign changes of the first coordinate of `x_k - x̄`, when `x̄` is known.
    pub oscillations: Option<usize>,
    pub output: Option<PathBuf>,
    pub error: Option<String>,
    pub reports: Vec<ReportRecord>,
}

impl RunSummary {
    pub fn succeeded(&self) -> bool {
        self.status == RunStatus::Completed
    }

    fn new(config: &ExperimentConfig, certificate: Certificate) -> Self {
        Self {
            name: config.name.clone(),
            problem: config.problem_name.clone(),
            method: config.method,
            status: RunStatus::Failed,
            termination: None,
            iterations: 0,
            final_f_gap: f64::NAN,
            final_grad_norm: f64::NAN,
            certificate,
            oscillations: None,
            output: None,
            error: None,
            reports: Vec::new(),
        }
    }

    /// One `key=value` line; check reports are rendered separately by
    /// [`RunSummary::report_lines`].
    pub fn to_line(&self) -> String {
        let mut r = ReportRecord::new("experiment")
            .text("name", &self.name)
            .text("problem", &self.problem)
            .text("method", self.method.as_str())
            .text("status", self.status.as_str())
            .text("termination", self.termination.as_deref().unwrap_or("none"))
            .int("iterations", self.iterations as u64)
            .float("final_f_gap", self.final_f_gap)
            .float("final_grad_norm", self.final_grad_norm)
            .text(
                "certificate",
                if self.certificate.valid {
                    "certified"
                } else {
                    "uncertified"
                },
            )
            .text(
                "violations",
                if self.certificate.violations.is_empty() {
                    "none".to_string()
                } else {
                    self.certificate.violations.join(",")
                },
            )
            .float("rate", self.certificate.rate)
            .text(
                "oscillations",
                self.oscillations
                    .map_or("na".to_string(), |c| c.to_string()),
            )
            .text(
                "output",
                self.output
                    .as_ref()
                    .map_or("none".to_string(), |p| p.display().to_string()),
            );
        if let Some(e) = &self.error {
            r = r.text("error", e.replace(char::is_whitespace, "_"));
        }
        r.to_line()
    }

    /// Check reports, each prefixed with the experiment name.
    pub fn report_lines(&self) -> Vec<String> {
        self.reports
            .iter()
            .map(|r| format!("experiment={} {}", self.name, r.to_line()))
            .collect()
    }
}

/// Write `contents` to `path` through a temporary file in the same
/// directory, so a failure never leaves a partial file behind.
pub fn write_atomically(path: &Path, contents: &str) -> Result<(), RunError> {
    let io = |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Rows `(k, t, f_gap, grad_norm, step_norm, energy, x)`.
struct Row<'a> {
    k: usize,
    t: f64,
    f_gap: f64,
    grad_norm: f64,
    step_norm: f64,
    energy: f64,
    x: &'a [f64],
}

fn csv<'a>(dim: usize, rows: impl Iterator<Item = Row<'a>>) -> String {
    let mut out = String::from("k,t,f_gap,grad_norm,step_norm,energy");
    for i in 0..dim {
        let _ = write!(out, ",x{i}");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            format_float(r.t),
            format_float(r.f_gap),
            format_float(r.grad_norm),
            format_float(r.step_norm),
            format_float(r.energy)
        );
        for v in r.x {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    out
}

/// Iterate a discrete method of `config` without writing anything.
///
/// # Panics
/// On an `ode` config, which is integrated rather than iterated.
pub fn run_discrete(config: &ExperimentConfig) -> hessdamp::Result<IterationTrace> {
    let (p, x0, stop) = (&config.problem, &config.init, &config.stop);
    match (&config.params, config.method) {
        (MethodParams::Gd { beta }, _) => gradient_descent(p, *beta, x0, stop),
        (MethodParams::HeavyBall(hb), Method::Hb) => heavy_ball(p, hb, x0, stop),
        (MethodParams::HeavyBall(hb), _) => heavy_ball_hessian(p, hb, x0, stop),
        (MethodParams::Nesterov(n), Method::Nesterov) => nesterov(p, n, x0, stop),
        (MethodParams::Nesterov(n), _) => nesterov_hessian(p, n, x0, stop),
        (MethodParams::Ode { .. }, _) => unreachable!("ode runs are integrated, not iterated"),
    }
}

/// Execute one experiment, writing its CSV under `out_dir`. `strict` forces
/// strict mode on top of the config's own flag. `seed` drives the
/// property checks.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_dir: &Path,
    strict: bool,
    seed: u64,
) -> RunSummary {
    let mut summary = RunSummary::new(config, certify(config));
    if (strict || config.strict) && !summary.certificate.valid {
        summary.status = RunStatus::RejectedByCertificate;
        return summary;
    }
    let path = out_dir.join(&config.output);
    let x_bar = config.problem.metadata.minimizer.clone();

    let outcome: Result<(), RunError> = (|| {
        match &config.params {
            MethodParams::Ode { params, integrator } => {
                let trace = integrate(&config.problem, params, *integrator)?;
                let last = trace.last();
                summary.iterations = trace.records.len() - 1;
                summary.final_f_gap = last.f_gap;
                summary.final_grad_norm = last.grad_norm;
                summary.termination = Some("t_end".into());
                summary.oscillations = x_bar
                    .as_ref()
                    .map(|c| count_sign_changes(trace.records.iter().map(|r| r.x[0] - c[0])));
                let rows = trace.records.iter().enumerate().map(|(k, r)| Row {
                    k,
                    t: r.t,
                    f_gap: r.f_gap,
                    grad_norm: r.grad_norm,
                    step_norm: if k == 0 {
                        0.0
                    } else {
                        linalg::dist(&r.x, &trace.records[k - 1].x)
                    },
                    energy: r.energy,
                    x: &r.x,
                });
                write_atomically(&path, &csv(config.problem.dim(), rows))?;
                let meta = &config.problem.metadata;
                if meta.gamma().is_some() && meta.minimizer.is_some() && meta.min_value.is_some() {
                    summary
                        .reports
                        .push(check_theorem1(&trace, params, meta)?.to_record());
                }
                summary
                    .reports
                    .push(corollary1_integrals(&trace, params)?.to_record());
                summary.status = RunStatus::Completed;
            }
            _ => {
                let trace = run_discrete(config)?;
                let last = trace.last();
                summary.iterations = trace.iterations();
                summary.final_f_gap = last.f_gap;
                summary.final_grad_norm = last.grad_norm;
                summary.termination = Some(trace.termination.as_str().to_string());
                summary.oscillations = x_bar.as_ref().map(|c| trace.sign_changes(0, c));
                let rows = trace.records.iter().map(|r| Row {
                    k: r.k,
                    t: r.k as f64,
                    f_gap: r.f_gap,
                    grad_norm: r.grad_norm,
                    step_norm: r.step_norm,
                    energy: r.energy,
                    x: &r.x,
                });
                write_atomically(&path, &csv(config.problem.dim(), rows))?;
                summary.status = if trace.diverged() {
                    RunStatus::Diverged
                } else {
                    RunStatus::Completed
                };
            }
        }
        summary.output = Some(path.clone());
        Ok(())
    })();

    match outcome {
        Ok(()) => {}
        Err(RunError::Solver(hessdamp::Error::NumericalDivergence { step })) => {
            summary.status = RunStatus::Diverged;
            summary.termination = Some("diverged".into());
            summary.iterations = step;
        }
        Err(e) => {
            summary.status = RunStatus::Failed;
            summary.error = Some(e.to_string());
        }
    }
    for name in &config.checks {
        match check_named(&config.problem, name, DEFAULT_SAMPLES, seed) {
            Ok(r) => summary.reports.push(r),
            Err(e) => summary.reports.push(
                ReportRecord::new(name.clone())
                    .text("error", e.to_string().replace(char::is_whitespace, "_")),
            ),
        }
    }
    summary
}

/// Run every experiment concurrently; summaries come back in config order.
pub fn run_all(
    configs: &[ExperimentConfig],
    out_dir: &Path,
    strict: bool,
    seed: u64,
) -> Vec<RunSummary> {
    configs
        .par_iter()
        .map(|c| run_experiment(c, out_dir, strict, seed))
        .collect()
}

/// Oscillation counts of two traces around the same center.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonRecord {
    pub count_a: usize,
    pub count_b: usize,
    /// `count_a - count_b`.
    pub difference: i64,
}

impl ComparisonRecord {
    pub fn to_record(&self) -> ReportRecord {
        ReportRecord::new("oscillations")
            .int("count_a", self.count_a as u64)
            .int("count_b", self.count_b as u64)
            .text("difference", self.difference.to_string())
    }
}

/// Sign changes of the first coordinate of `x_k - center` in each trace.
pub fn compare_oscillations(
    a: &IterationTrace,
    b: &IterationTrace,
    center: &[f64],
) -> ComparisonRecord {
    let count_a = a.sign_changes(0, center);
    let count_b = b.sign_changes(0, center);
    ComparisonRecord {
        count_a,
        count_b,
        difference: count_a as i64 - count_b as i64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use hessdamp::{IterationRecord, Termination};

    fn trace(xs: &[f64]) -> IterationTrace {
        IterationTrace {
            records: xs
                .iter()
                .enumerate()
                .map(|(k, &x)| IterationRecord {
                    k,
                    x: vec![x],
                    f_gap: 0.0,
                    grad_norm: 0.0,
                    step_norm: 0.0,
                    energy: 0.0,
                })
                .collect(),
            termination: Termination::MaxIterations,
        }
    }

    #[test]
    fn monotone_versus_oscillating() {
        let c = compare_oscillations(
            &trace(&[3.0, 2.0, 1.0, 0.5]),
            &trace(&[3.0, -1.0, 0.5, -0.1]),
            &[0.0],
        );
        assert_eq!(
            c,
            ComparisonRecord {
                count_a: 0,
                count_b: 3,
                difference: -3
            }
        );
    }

    #[test]
    fn csv_layout() {
        let x = [1.0, 2.0];
        let text = csv(
            2,
            std::iter::once(Row {
                k: 0,
                t: 0.0,
                f_gap: 0.5,
                grad_norm: 1.0,
                step_norm: 0.0,
                energy: f64::NAN,
                x: &x,
            }),
        );
        assert_eq!(
            text,
            "k,t,f_gap,grad_norm,step_norm,energy,x0,x1\n0,0.0000000000000000e0,5.0000000000000000e-1,1.0000000000000000e0,0.0000000000000000e0,NaN,1.0000000000000000e0,2.0000000000000000e0\n"
        );
    }

    #[test]
    fn gradient_descent_certificate() {
        let cfg = parse_config("[g]\nproblem = example1\nmethod = gd\nbeta = 1/12\n").unwrap();
        assert!(certify(&cfg[0]).valid);
        let cfg = parse_config("[g]\nproblem = example1\nmethod = gd\nbeta = 1\n").unwrap();
        assert!(!certify(&cfg[0]).valid);
    }

    #[test]
    fn summary_line_mentions_certificate() {
        let cfg = parse_config("[h]\nproblem = example1\nmethod = hb\nalpha = 0.8\nbeta = 1/24\n")
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let s = run_experiment(&cfg[0], dir.path(), false, 0);
        assert!(s.succeeded());
        let line = s.to_line();
        assert!(line
            .starts_with("report=experiment name=h problem=example1 method=hb status=completed"));
        assert!(line.contains("certificate=uncertified violations=alpha_range,step_sum_range"));
    }
}
