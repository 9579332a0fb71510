//! Experiment config files.
//!
//! One `[name]` section per experiment, then `key = value` lines. `#` starts
//! a comment. Vectors are comma-separated; any number may be written as a
//! fraction `p/q`.
//!
//! ```text
//! [hb_hessian]
//! problem = example1
//! method = hb_hessian
//! alpha = 0.8
//! theta = 0.05
//! beta = 1/24
//! init = 3
//! grad_tol = 1e-6
//! max_iters = 500
//! ```

use std::collections::HashMap;
use std::path::PathBuf;

use hessdamp::continuous::{ContinuousParams, Integrator, DEFAULT_DT};
use hessdamp::functions::{from_name, PROBLEM_NAMES};
use hessdamp::solvers::{default_epsilon, nesterov_mu, HeavyBallParams, NesterovParams};
use hessdamp::{StoppingRule, TestProblem};

use crate::error::ConfigError;

/// Default `eta` for the Nesterov certificate.
pub const DEFAULT_ETA: f64 = 2.0;

/// Default `epsilon` when the problem constants are unknown or the step is
/// outside the range where the midpoint default is positive.
pub const FALLBACK_EPSILON: f64 = 1e-3;

/// Default `grad_tol` and `max_iters`.
pub const DEFAULT_GRAD_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Gd,
    Hb,
    HbHessian,
    Nesterov,
    NesterovHessian,
    Ode,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gd" => Method::Gd,
            "hb" => Method::Hb,
            "hb_hessian" => Method::HbHessian,
            "nesterov" => Method::Nesterov,
            "nesterov_hessian" => Method::NesterovHessian,
            "ode" => Method::Ode,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Hb => "hb",
            Method::HbHessian => "hb_hessian",
            Method::Nesterov => "nesterov",
            Method::NesterovHessian => "nesterov_hessian",
            Method::Ode => "ode",
        }
    }

    /// Keys accepted in addition to the common ones.
    fn keys(&self) -> &'static [&'static str] {
        const STOP: [&str; 4] = ["grad_tol", "max_iters", "step_tol", "gap_tol"];
        match self {
            Method::Gd => &["beta", STOP[0], STOP[1], STOP[2], STOP[3]],
            Method::Hb => &["alpha", "beta", STOP[0], STOP[1], STOP[2], STOP[3]],
            Method::HbHessian => &["alpha", "theta", "beta", STOP[0], STOP[1], STOP[2], STOP[3]],
            Method::Nesterov => &[
                "alpha", "beta", "eta", "epsilon", STOP[0], STOP[1], STOP[2], STOP[3],
            ],
            Method::NesterovHessian => &[
                "alpha", "theta", "beta", "eta", "epsilon", STOP[0], STOP[1], STOP[2], STOP[3],
            ],
            Method::Ode => &["alpha", "beta", "kappa", "t_end", "dt", "v0", "integrator"],
        }
    }
}

const COMMON_KEYS: &[&str] = &[
    "problem",
    "problem_args",
    "method",
    "init",
    "gamma",
    "lipschitz",
    "checks",
    "output",
    "strict",
];

/// Method-specific parameters, resolved against the problem's constants.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodParams {
    Gd {
        beta: f64,
    },
    HeavyBall(HeavyBallParams),
    Nesterov(NesterovParams),
    Ode {
        params: ContinuousParams,
        integrator: Integrator,
    },
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    /// Line of the section header.
    pub line: usize,
    pub problem_name: String,
    pub problem_args: Vec<f64>,
    /// Problem with any `gamma`/`lipschitz` overrides applied.
    pub problem: TestProblem,
    pub method: Method,
    pub params: MethodParams,
    pub init: Vec<f64>,
    /// Unused for `ode`, which stops at `t_end`.
    pub stop: StoppingRule,
    pub checks: Vec<String>,
    /// Relative paths are resolved against the run's output directory.
    pub output: PathBuf,
    pub strict: bool,
}

struct Entry {
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: HashMap<String, Entry>,
}

impl Section {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn err(&self, line: usize, message: impl Into<String>) -> ConfigError {
        ConfigError::Parse {
            line,
            message: format!("[{}] {}", self.name, message.into()),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|e| {
                parse_number(&e.value).ok_or_else(|| {
                    self.err(e.line, format!("{key}: '{}' is not a number", e.value))
                })
            })
            .transpose()
    }

    fn required(&self, key: &str) -> Result<f64, ConfigError> {
        self.number(key)?
            .ok_or_else(|| self.err(self.line, format!("missing key '{key}'")))
    }

    fn vector(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.get(key)
            .map(|e| {
                parse_vector(&e.value).ok_or_else(|| {
                    self.err(
                        e.line,
                        format!("{key}: '{}' is not a list of numbers", e.value),
                    )
                })
            })
            .transpose()
    }

    fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| {
                    self.err(
                        e.line,
                        format!("{key}: '{}' is not a nonnegative integer", e.value),
                    )
                })
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.get(key)
            .map(|e| match e.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(self.err(e.line, format!("{key}: '{other}' is not true or false"))),
            })
            .transpose()
    }
}

/// A decimal number or a fraction `p/q`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => p.trim().parse::<f64>().ok()? / q.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

/// Comma-separated numbers; the empty string is the empty list.
pub fn parse_vector(s: &str) -> Option<Vec<f64>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(parse_number).collect()
}

fn split_sections(text: &str) -> Result<Vec<Section>, ConfigError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| {
                    !n.is_empty()
                        && n.chars()
                            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                })
                .ok_or_else(|| ConfigError::Parse {
                    line,
                    message: format!("malformed section header '{content}'"),
                })?;
            if sections.iter().any(|s| s.name == name) {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("duplicate experiment '{name}'"),
                });
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: HashMap::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected 'key = value', got '{content}'"),
        })?;
        let key = key.trim();
        let section = sections.last_mut().ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("key '{key}' outside any [section]"),
        })?;
        if section.entries.contains_key(key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key '{key}'"),
            });
        }
        section.entries.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                line,
            },
        );
    }
    Ok(sections)
}

fn build(section: &Section) -> Result<ExperimentConfig, ConfigError> {
    let method_entry = section
        .get("method")
        .ok_or_else(|| section.err(section.line, "missing key 'method'"))?;
    let method = Method::parse(&method_entry.value).ok_or_else(|| ConfigError::UnknownMethod {
        line: method_entry.line,
        name: method_entry.value.clone(),
    })?;

    let mut keys: Vec<(&String, &Entry)> = section.entries.iter().collect();
    keys.sort_by_key(|(_, e)| e.line);
    for (key, entry) in keys {
        if !COMMON_KEYS.contains(&key.as_str()) && !method.keys().contains(&key.as_str()) {
            return Err(section.err(
                entry.line,
                format!("unknown key '{key}' for method {}", method.as_str()),
            ));
        }
    }

    let problem_entry = section
        .get("problem")
        .ok_or_else(|| section.err(section.line, "missing key 'problem'"))?;
    let problem_name = problem_entry.value.clone();
    if !PROBLEM_NAMES.contains(&problem_name.as_str()) {
        return Err(ConfigError::UnknownProblem {
            line: problem_entry.line,
            name: problem_name,
        });
    }
    let problem_args = section.vector("problem_args")?.unwrap_or_default();
    let args_line = section
        .get("problem_args")
        .map_or(problem_entry.line, |e| e.line);
    let mut problem = from_name(&problem_name, &problem_args)
        .map_err(|e| section.err(args_line, e.to_string()))?;
    if let Some(g) = section.number("gamma")? {
        problem.metadata.gamma = g;
    }
    if let Some(l) = section.number("lipschitz")? {
        problem.metadata.lipschitz_grad = l;
    }

    let init = section
        .vector("init")?
        .unwrap_or_else(|| problem.default_init.clone());
    if init.len() != problem.dim() {
        let line = section.get("init").map_or(section.line, |e| e.line);
        return Err(section.err(
            line,
            format!(
                "init has length {}, problem dimension is {}",
                init.len(),
                problem.dim()
            ),
        ));
    }

    let params = match method {
        Method::Gd => MethodParams::Gd {
            beta: section.required("beta")?,
        },
        Method::Hb | Method::HbHessian => MethodParams::HeavyBall(HeavyBallParams::new(
            section.required("alpha")?,
            section.number("theta")?.unwrap_or(0.0),
            section.required("beta")?,
        )),
        Method::Nesterov | Method::NesterovHessian => {
            let beta = section.required("beta")?;
            let eta = section.number("eta")?.unwrap_or(DEFAULT_ETA);
            let epsilon = match section.number("epsilon")? {
                Some(e) => e,
                None => match (problem.metadata.gamma(), problem.metadata.lipschitz()) {
                    // Outside the certified step range the midpoint can be
                    // nonpositive; epsilon only affects the certificate.
                    (Some(g), Some(l)) => Some(default_epsilon(nesterov_mu(beta, eta, g, l).0))
                        .filter(|e| *e > 0.0 && e.is_finite())
                        .unwrap_or(FALLBACK_EPSILON),
                    _ => FALLBACK_EPSILON,
                },
            };
            MethodParams::Nesterov(NesterovParams::new(
                section.required("alpha")?,
                section.number("theta")?.unwrap_or(0.0),
                beta,
                eta,
                epsilon,
            ))
        }
        Method::Ode => {
            let kappa = match section.number("kappa")? {
                Some(k) => k,
                None => match (problem.metadata.gamma(), problem.metadata.lipschitz()) {
                    (Some(g), Some(l)) => g / l,
                    _ => {
                        return Err(section.err(
                            section.line,
                            "missing key 'kappa' and no gamma/L to derive it",
                        ))
                    }
                },
            };
            let v0 = section
                .vector("v0")?
                .unwrap_or_else(|| vec![0.0; init.len()]);
            let integrator = match section.get("integrator") {
                Some(e) => e
                    .value
                    .parse::<Integrator>()
                    .map_err(|err| section.err(e.line, err.to_string()))?,
                None => Integrator::Rk4,
            };
            let params = ContinuousParams::new(
                section.required("alpha")?,
                section.number("beta")?.unwrap_or(0.0),
                kappa,
                section.required("t_end")?,
                section.number("dt")?.unwrap_or(DEFAULT_DT),
                init.clone(),
                v0,
            )
            .map_err(|e| section.err(section.line, e.to_string()))?;
            MethodParams::Ode { params, integrator }
        }
    };

    let mut stop = StoppingRule::new(
        section.number("grad_tol")?.unwrap_or(DEFAULT_GRAD_TOL),
        section.count("max_iters")?.unwrap_or(DEFAULT_MAX_ITERS),
    );
    if let Some(t) = section.number("step_tol")? {
        stop = stop.with_step_tol(t);
    }
    if let Some(t) = section.number("gap_tol")? {
        stop = stop.with_gap_tol(t);
    }
    stop.validate()
        .map_err(|e| section.err(section.line, e.to_string()))?;

    let checks: Vec<String> = section
        .get("checks")
        .map(|e| {
            e.value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
        .unwrap_or_default();
    if let Some(bad) = checks
        .iter()
        .find(|c| !hessdamp::analysis::PROPERTY_NAMES.contains(&c.as_str()))
    {
        return Err(section.err(
            section.get("checks").map_or(section.line, |e| e.line),
            format!("unknown check '{bad}'"),
        ));
    }

    Ok(ExperimentConfig {
        name: section.name.clone(),
        line: section.line,
        problem_name,
        problem_args,
        problem,
        method,
        params,
        init,
        stop,
        checks,
        output: section.get("output").map_or_else(
            || PathBuf::from(format!("{}.csv", section.name)),
            |e| PathBuf::from(&e.value),
        ),
        strict: section.flag("strict")?.unwrap_or(false),
    })
}

/// Parse every experiment of a config file, in file order.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentConfig>, ConfigError> {
    split_sections(text)?.iter().map(build).collect()
}
