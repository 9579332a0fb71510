//! Sampling-based checks of the structural assumptions: strong
//! quasiconvexity, the PL inequality, quadratic growth, the first-order
//! characterization, the descent lemma, quasar convexity, and the growth
//! ratios near the minimizer and at infinity.
//!
//! Sampling can refute a property but never prove it: a passing report means
//! "no violation found among N samples". Sample `i` is drawn from its own
//! ChaCha stream, so the first `N` samples are identical for every larger
//! sample count with the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functions::TestProblem;
use crate::linalg;
use crate::record::ReportRecord;

/// Default tolerance below zero before a margin counts as a violation.
pub const DEFAULT_SLACK: f64 = 1e-9;

/// Default sample count used by [`check_named`].
pub const DEFAULT_SAMPLES: usize = 1000;

/// Seed used for the sphere directions of [`proposition1_diagnostics`].
pub const SPHERE_SEED: u64 = 0x5eed;

/// Number of directions sampled per sphere.
pub const SPHERE_DIRECTIONS: usize = 64;

/// Names accepted by [`check_named`].
pub const PROPERTY_NAMES: &[&str] = &[
    "strong_quasiconvexity",
    "pl",
    "quadratic_growth",
    "gradient_characterization",
    "descent_lemma",
    "quasar",
    "growth_ratios",
];

/// The sample that achieved the worst margin.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// One point for pointwise properties, `(x, y)` for pairs and triples.
    pub points: Vec<Vec<f64>>,
    /// Interpolation weight for triples.
    pub lambda: Option<f64>,
}

/// Outcome of a sampling check.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub property: String,
    /// `worst_violation >= -slack`.
    pub passed: bool,
    /// Smallest margin observed.
    pub worst_violation: f64,
    pub witness: Witness,
    /// Samples actually evaluated (nonsmooth points are skipped).
    pub samples: usize,
    pub seed: u64,
}

impl PropertyReport {
    pub fn to_record(&self) -> ReportRecord {
        let mut r = ReportRecord::new(self.property.clone())
            .flag("passed", self.passed)
            .float("worst_violation", self.worst_violation)
            .int("samples", self.samples as u64)
            .int("seed", self.seed);
        for (i, p) in self.witness.points.iter().enumerate() {
            r = r.vector(&format!("witness{i}"), p);
        }
        if let Some(l) = self.witness.lambda {
            r = r.float("witness_lambda", l);
        }
        r
    }
}

/// Per-sample random source; sample `i` always sees the same numbers.
fn sample_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn uniform_in_box(problem: &TestProblem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = &problem.test_box;
    lo.iter()
        .zip(hi)
        .map(|(a, b)| a + (b - a) * rng.random::<f64>())
        .collect()
}

/// Points where the gradient may not exist are skipped rather than counted.
fn smooth(problem: &TestProblem, x: &[f64]) -> bool {
    problem.objective.is_smooth_at(x)
}

fn gradient_or_skip(problem: &TestProblem, x: &[f64]) -> Result<Option<Vec<f64>>> {
    if !smooth(problem, x) {
        return Ok(None);
    }
    match problem.gradient(x) {
        Ok(g) => Ok(Some(g)),
        Err(Error::NonDifferentiablePoint) => Ok(None),
        Err(e) => Err(e),
    }
}

fn require_samples(n_samples: usize) -> Result<()> {
    if n_samples == 0 {
        Err(Error::invalid("n_samples must be positive"))
    } else {
        Ok(())
    }
}

/// Tracks the smallest margin seen so far.
struct Worst {
    margin: f64,
    witness: Option<Witness>,
    samples: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            margin: f64::INFINITY,
            witness: None,
            samples: 0,
        }
    }

    fn observe(&mut self, margin: f64, witness: impl FnOnce() -> Witness) {
        self.samples += 1;
        if self.witness.is_none()
            || margin < self.margin
            || margin.is_nan() && !self.margin.is_nan()
        {
            self.margin = margin;
            self.witness = Some(witness());
        }
    }

    fn finish(self, property: &str, drawn: usize, seed: u64) -> Result<PropertyReport> {
        let witness = self
            .witness
            .ok_or(Error::InsufficientSamples { retained: 0, drawn })?;
        Ok(PropertyReport {
            property: property.into(),
            passed: self.margin >= -DEFAULT_SLACK,
            worst_violation: self.margin,
            witness,
            samples: self.samples,
            seed,
        })
    }
}

fn single(x: Vec<f64>) -> Witness {
    Witness {
        points: vec![x],
        lambda: None,
    }
}

fn pair(x: Vec<f64>, y: Vec<f64>) -> Witness {
    Witness {
        points: vec![x, y],
        lambda: None,
    }
}

/// `max{h(x), h(y)} - λ(1-λ)(γ/2)‖x-y‖² - h(λy + (1-λ)x)` over random triples.
pub fn check_strong_quasiconvexity(
    problem: &TestProblem,
    gamma: f64,
    n_samples: usize,
    seed: u64,
) -> Result<PropertyReport> {
    require_samples(n_samples)?;
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma must be positive"));
    }
    let mut worst = Worst::new();
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i);
        let x = uniform_in_box(problem, &mut rng);
        let y = uniform_in_box(problem, &mut rng);
        let lambda: f64 = rng.random();
        let z = linalg::lerp(&x, &y, lambda);
        let hx = problem.value(&x)?;
        let hy = problem.value(&y)?;
        let hz = problem.value(&z)?;
        let margin =
            hx.max(hy) - lambda * (1.0 - lambda) * 0.5 * gamma * linalg::dist_sq(&x, &y) - hz;
        worst.observe(margin, || Witness {
            points: vec![x, y],
            lambda: Some(lambda),
        });
    }
    worst.finish("strong_quasiconvexity", n_samples, seed)
}

/// `‖∇h(x)‖² - (γ²/2L)(h(x) - h*)` at random points.
pub fn check_pl(problem: &TestProblem, n_samples: usize, seed: u64) -> Result<PropertyReport> {
    require_samples(n_samples)?;
    let meta = &problem.metadata;
    let (Some(gamma), Some(l), Some(h_star)) = (meta.gamma(), meta.lipschitz(), meta.min_value)
    else {
        return Err(Error::invalid(
            "PL check requires gamma, L and the minimum value",
        ));
    };
    let mu = gamma * gamma / (2.0 * l);
    let mut worst = Worst::new();
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i);
        let x = uniform_in_box(problem, &mut rng);
        let Some(g) = gradient_or_skip(problem, &x)? else {
            continue;
        };
        let margin = linalg::norm_sq(&g) - mu * (problem.value(&x)? - h_star);
        worst.observe(margin, || single(x));
    }
    worst.finish("pl", n_samples, seed)
}

/// `h(x) - h* - (γ/4)‖x - x̄‖²` at random points.
pub fn check_quadratic_growth(
    problem: &TestProblem,
    n_samples: usize,
    seed: u64,
) -> Result<PropertyReport> {
    require_samples(n_samples)?;
    let meta = &problem.metadata;
    let (Some(gamma), Some(x_bar), Some(h_star)) =
        (meta.gamma(), meta.minimizer.as_deref(), meta.min_value)
    else {
        return Err(Error::invalid(
            "quadratic growth check requires gamma, the minimizer and the minimum value",
        ));
    };
    let mut worst = Worst::new();
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i);
        let x = uniform_in_box(problem, &mut rng);
        let margin = problem.value(&x)? - h_star - 0.25 * gamma * linalg::dist_sq(&x, x_bar);
        worst.observe(margin, || single(x));
    }
    worst.finish("quadratic_growth", n_samples, seed)
}

/// For pairs ordered so that `h(x) <= h(y)`:
/// `-(γ/2)‖y - x‖² - ⟨∇h(y), x - y⟩`.
pub fn check_gradient_characterization(
    problem: &TestProblem,
    gamma: f64,
    n_samples: usize,
    seed: u64,
) -> Result<PropertyReport> {
    require_samples(n_samples)?;
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma must be positive"));
    }
    let mut worst = Worst::new();
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i);
        let mut x = uniform_in_box(problem, &mut rng);
        let mut y = uniform_in_box(problem, &mut rng);
        if problem.value(&x)? > problem.value(&y)? {
            std::mem::swap(&mut x, &mut y);
        }
        let Some(gy) = gradient_or_skip(problem, &y)? else {
            continue;
        };
        let margin =
            -0.5 * gamma * linalg::dist_sq(&x, &y) - linalg::dot(&gy, &linalg::sub(&x, &y));
        worst.observe(margin, || pair(x, y));
    }
    worst.finish("gradient_characterization", n_samples, seed)
}

/// `h(x) + ⟨∇h(x), y - x⟩ + (L/2)‖x - y‖² - h(y)` over random pairs.
pub fn check_descent_lemma(
    problem: &TestProblem,
    n_samples: usize,
    seed: u64,
) -> Result<PropertyReport> {
    require_samples(n_samples)?;
    let l = problem
        .metadata
        .lipschitz()
        .ok_or_else(|| Error::invalid("descent lemma check requires L"))?;
    let mut worst = Worst::new();
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i);
        let x = uniform_in_box(problem, &mut rng);
        let y = uniform_in_box(problem, &mut rng);
        let Some(gx) = gradient_or_skip(problem, &x)? else {
            continue;
        };
        let margin = problem.value(&x)?
            + linalg::dot(&gx, &linalg::sub(&y, &x))
            + 0.5 * l * linalg::dist_sq(&x, &y)
            - problem.value(&y)?;
        worst.observe(margin, || pair(x, y));
    }
    worst.finish("descent_lemma", n_samples, seed)
}

/// Smallest observed ratio `⟨∇h(x), x - x̄⟩ / (h(x) - h*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasarEstimate {
    pub kappa_hat: f64,
    pub gap_floor: f64,
    /// Samples retained after the gap floor and smoothness filters.
    pub samples: usize,
    pub drawn: usize,
    pub seed: u64,
    /// Point achieving `kappa_hat`.
    pub witness: Vec<f64>,
}

impl QuasarEstimate {
    pub fn to_record(&self) -> ReportRecord {
        ReportRecord::new("quasar")
            .float("kappa_hat", self.kappa_hat)
            .float("gap_floor", self.gap_floor)
            .int("samples", self.samples as u64)
            .int("drawn", self.drawn as u64)
            .int("seed", self.seed)
            .vector("witness0", &self.witness)
    }
}

/// Default gap floor `1e-8 (1 + |h*|)`.
pub fn default_gap_floor(h_star: f64) -> f64 {
    1e-8 * (1.0 + h_star.abs())
}

/// Estimate the quasar-convexity modulus from random points, skipping those
/// whose gap is below `gap_floor` (default [`default_gap_floor`]).
pub fn estimate_kappa(
    problem: &TestProblem,
    n_samples: usize,
    gap_floor: Option<f64>,
    seed: u64,
) -> Result<QuasarEstimate> {
    require_samples(n_samples)?;
    let meta = &problem.metadata;
    let (Some(x_bar), Some(h_star)) = (meta.minimizer.as_deref(), meta.min_value) else {
        return Err(Error::invalid(
            "quasar estimate requires the minimizer and the minimum value",
        ));
    };
    let floor = gap_floor.unwrap_or_else(|| default_gap_floor(h_star));
    if !(floor >= 0.0) {
        return Err(Error::invalid("gap floor must be nonnegative"));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut retained = 0;
    for i in 0..n_samples {
        let mut rng = sample_rng(seed, i);
        let x = uniform_in_box(problem, &mut rng);
        let gap = problem.value(&x)? - h_star;
        if !(gap >= floor) || gap <= 0.0 {
            continue;
        }
        let Some(g) = gradient_or_skip(problem, &x)? else {
            continue;
        };
        retained += 1;
        let ratio = linalg::dot(&g, &linalg::sub(&x, x_bar)) / gap;
        if best.as_ref().is_none_or(|(r, _)| ratio < *r) {
            best = Some((ratio, x));
        }
    }
    let (kappa_hat, witness) = best.ok_or(Error::InsufficientSamples {
        retained: 0,
        drawn: n_samples,
    })?;
    Ok(QuasarEstimate {
        kappa_hat,
        gap_floor: floor,
        samples: retained,
        drawn: n_samples,
        seed,
        witness,
    })
}

/// Growth ratios on spheres of one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusRow {
    pub radius: f64,
    /// `sup h(x)/‖x‖²` over `‖x‖ = r`.
    pub outer_ratio: f64,
    /// `sup (h(x) - h*)/‖x - x̄‖²` over `‖x - x̄‖ = r`.
    pub inner_ratio: f64,
}

/// Trend of the growth ratios over a list of radii; diagnostic only.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthDiagnostics {
    pub rows: Vec<RadiusRow>,
}

impl GrowthDiagnostics {
    pub fn to_record(&self) -> ReportRecord {
        let radii: Vec<f64> = self.rows.iter().map(|r| r.radius).collect();
        let outer: Vec<f64> = self.rows.iter().map(|r| r.outer_ratio).collect();
        let inner: Vec<f64> = self.rows.iter().map(|r| r.inner_ratio).collect();
        ReportRecord::new("growth_ratios")
            .vector("radii", &radii)
            .vector("outer", &outer)
            .vector("inner", &inner)
    }
}

/// Unit directions: both signs in one dimension, otherwise normalized
/// uniform samples from the cube `[-1, 1]ⁿ`.
fn sphere_directions(n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![1.0], vec![-1.0]];
    }
    let mut dirs = Vec::with_capacity(SPHERE_DIRECTIONS);
    let mut i = 0;
    while dirs.len() < SPHERE_DIRECTIONS {
        let mut rng = sample_rng(SPHERE_SEED, i);
        i += 1;
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = linalg::norm(&d);
        if norm > 1e-3 {
            dirs.push(linalg::scale(1.0 / norm, &d));
        }
    }
    dirs
}

fn sup_ratio(values: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    let mut sup = f64::NAN;
    for v in values {
        match v {
            Ok(r) => sup = if sup.is_nan() { r } else { sup.max(r) },
            Err(Error::DomainViolation(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(sup)
}

/// For each radius, the largest sampled `h(x)/‖x‖²` on the sphere around the
/// origin and `(h(x) - h*)/‖x - x̄‖²` on the sphere around `x̄`. Points outside
/// the function's domain are ignored; a radius with no admissible point
/// reports NaN.
pub fn proposition1_diagnostics(problem: &TestProblem, radii: &[f64]) -> Result<GrowthDiagnostics> {
    if radii.is_empty() {
        return Err(Error::invalid("radii must not be empty"));
    }
    if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("radii must be positive and finite"));
    }
    let meta = &problem.metadata;
    let (Some(x_bar), Some(h_star)) = (meta.minimizer.as_deref(), meta.min_value) else {
        return Err(Error::invalid(
            "growth diagnostics require the minimizer and the minimum value",
        ));
    };
    let dirs = sphere_directions(problem.dim());
    let rows = radii
        .iter()
        .map(|&r| {
            let outer_ratio = sup_ratio(
                dirs.iter()
                    .map(|d| Ok(problem.value(&linalg::scale(r, d))? / (r * r))),
            )?;
            let inner_ratio = sup_ratio(dirs.iter().map(|d| {
                let mut x = x_bar.to_vec();
                linalg::axpy(r, d, &mut x);
                Ok((problem.value(&x)? - h_star) / (r * r))
            }))?;
            Ok(RadiusRow {
                radius: r,
                outer_ratio,
                inner_ratio,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GrowthDiagnostics { rows })
}

/// Radii used by [`check_named`] for the growth diagnostics.
pub const DEFAULT_RADII: &[f64] = &[0.01, 0.1, 1.0, 10.0, 100.0];

/// Run the check called `name` with constants from the problem metadata.
pub fn check_named(
    problem: &TestProblem,
    name: &str,
    n_samples: usize,
    seed: u64,
) -> Result<ReportRecord> {
    let gamma = || {
        problem
            .metadata
            .gamma()
            .ok_or_else(|| Error::invalid(format!("{name} requires gamma")))
    };
    match name {
        "strong_quasiconvexity" => {
            Ok(check_strong_quasiconvexity(problem, gamma()?, n_samples, seed)?.to_record())
        }
        "pl" => Ok(check_pl(problem, n_samples, seed)?.to_record()),
        "quadratic_growth" => Ok(check_quadratic_growth(problem, n_samples, seed)?.to_record()),
        "gradient_characterization" => {
            Ok(check_gradient_characterization(problem, gamma()?, n_samples, seed)?.to_record())
        }
        "descent_lemma" => Ok(check_descent_lemma(problem, n_samples, seed)?.to_record()),
        "quasar" => Ok(estimate_kappa(problem, n_samples, None, seed)?.to_record()),
        "growth_ratios" => Ok(proposition1_diagnostics(problem, DEFAULT_RADII)?.to_record()),
        other => Err(Error::invalid(format!("unknown property '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{cubic, example1, quadratic, sigmoid_ratio};

    #[test]
    fn example1_properties_hold() {
        let p = example1();
        assert!(
            check_strong_quasiconvexity(&p, 0.5, 2000, 1)
                .unwrap()
                .passed
        );
        assert!(check_pl(&p, 1000, 2).unwrap().passed);
        assert!(check_quadratic_growth(&p, 1000, 3).unwrap().passed);
        assert!(
            check_gradient_characterization(&p, 0.5, 2000, 4)
                .unwrap()
                .passed
        );
        assert!(check_descent_lemma(&p, 2000, 5).unwrap().passed);
    }

    #[test]
    fn violations_are_found() {
        assert!(
            !check_strong_quasiconvexity(&cubic(), 1.0, 2000, 7)
                .unwrap()
                .passed
        );
        assert!(
            !check_strong_quasiconvexity(&example1(), 10.0, 2000, 7)
                .unwrap()
                .passed
        );
        assert!(
            !check_gradient_characterization(&sigmoid_ratio(), 0.1, 2000, 7)
                .unwrap()
                .passed
        );

        let mut inflated = example1();
        inflated.metadata.gamma *= 100.0;
        assert!(!check_quadratic_growth(&inflated, 1000, 7).unwrap().passed);

        let mut halved = example1();
        halved.metadata.lipschitz_grad = 3.0;
        assert!(!check_descent_lemma(&halved, 2000, 7).unwrap().passed);
    }

    #[test]
    fn contracts() {
        let p = example1();
        assert!(matches!(check_pl(&p, 0, 1), Err(Error::InvalidInput(_))));
        assert!(matches!(
            check_strong_quasiconvexity(&p, 0.5, 0, 1),
            Err(Error::InvalidInput(_))
        ));
        let mut no_l = example1();
        no_l.metadata.lipschitz_grad = 0.0;
        assert!(matches!(
            check_pl(&no_l, 10, 1),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            proposition1_diagnostics(&p, &[]),
            Err(Error::InvalidInput(_))
        ));
        assert!(check_named(&p, "bogus", 10, 1).is_err());
    }

    #[test]
    fn kappa_estimates() {
        let q = quadratic(3).unwrap();
        let est = estimate_kappa(&q, 500, None, 9).unwrap();
        assert!((est.kappa_hat - 2.0).abs() < 1e-6);
        let e1 = estimate_kappa(&example1(), 2000, None, 9).unwrap();
        assert!(e1.kappa_hat >= 1.0 / 12.0 - 1e-6);
    }

    #[test]
    fn kappa_needs_retained_samples() {
        let p = example1().with_test_box(vec![-1e-6], vec![1e-6]).unwrap();
        let err = estimate_kappa(&p, 50, Some(1.0), 1).unwrap_err();
        assert_eq!(
            err,
            Error::InsufficientSamples {
                retained: 0,
                drawn: 50
            }
        );
    }

    #[test]
    fn growth_ratios() {
        let q = quadratic(2).unwrap();
        let d = proposition1_diagnostics(&q, &[0.5, 2.0]).unwrap();
        for row in &d.rows {
            assert!((row.outer_ratio - 0.5).abs() < 1e-12);
            assert!((row.inner_ratio - 0.5).abs() < 1e-12);
        }
        let e = proposition1_diagnostics(&example1(), DEFAULT_RADII).unwrap();
        assert!(e
            .rows
            .iter()
            .all(|r| r.outer_ratio <= 3.0 && r.inner_ratio <= 3.0));
        assert!((e.rows[4].outer_ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn report_is_deterministic() {
        let p = example1();
        assert_eq!(
            check_pl(&p, 100, 11).unwrap(),
            check_pl(&p, 100, 11).unwrap()
        );
        assert_ne!(
            check_pl(&p, 100, 11).unwrap().witness,
            check_pl(&p, 100, 12).unwrap().witness
        );
    }

    #[test]
    fn record_line() {
        let line = check_quadratic_growth(&example1(), 10, 3)
            .unwrap()
            .to_record()
            .to_line();
        assert!(line.starts_with("report=quadratic_growth passed=true worst_violation="));
        assert!(line.contains(" samples=10 seed=3 witness0="));
    }
}
