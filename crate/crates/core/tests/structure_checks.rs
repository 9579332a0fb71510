//! Sampling checkers: soundness of reported witnesses, nesting of sample
//! sets, and the exact-margin cases at the minimizer.

use hessdamp::analysis::{
    check_descent_lemma, check_gradient_characterization, check_pl, check_quadratic_growth,
    check_strong_quasiconvexity, estimate_kappa, PropertyReport,
};
use hessdamp::functions::{cubic, example1, sigmoid_ratio};
use hessdamp::linalg;
use hessdamp::TestProblem;
use proptest::prelude::*;

/// Recompute a report's margin from its witness, independently of the checker.
fn recompute(p: &TestProblem, report: &PropertyReport, gamma: f64) -> f64 {
    let h = |x: &[f64]| p.value(x).unwrap();
    let g = |x: &[f64]| p.gradient(x).unwrap();
    let pts = &report.witness.points;
    let meta = &p.metadata;
    match report.property.as_str() {
        "strong_quasiconvexity" => {
            let (x, y, l) = (&pts[0], &pts[1], report.witness.lambda.unwrap());
            let z: Vec<f64> = x
                .iter()
                .zip(y)
                .map(|(a, b)| l * b + (1.0 - l) * a)
                .collect();
            h(x).max(h(y)) - l * (1.0 - l) * 0.5 * gamma * linalg::dist_sq(x, y) - h(&z)
        }
        "pl" => {
            let x = &pts[0];
            let mu = meta.gamma * meta.gamma / (2.0 * meta.lipschitz_grad);
            linalg::norm_sq(&g(x)) - mu * (h(x) - meta.min_value.unwrap())
        }
        "quadratic_growth" => {
            let x = &pts[0];
            let x_bar = meta.minimizer.as_ref().unwrap();
            h(x) - meta.min_value.unwrap() - 0.25 * meta.gamma * linalg::dist_sq(x, x_bar)
        }
        "gradient_characterization" => {
            let (x, y) = (&pts[0], &pts[1]);
            assert!(h(x) <= h(y));
            -0.5 * gamma * linalg::dist_sq(x, y) - linalg::dot(&g(y), &linalg::sub(x, y))
        }
        "descent_lemma" => {
            let (x, y) = (&pts[0], &pts[1]);
            h(x) + linalg::dot(&g(x), &linalg::sub(y, x))
                + 0.5 * meta.lipschitz_grad * linalg::dist_sq(x, y)
                - h(y)
        }
        other => panic!("unexpected property {other}"),
    }
}

fn assert_sound(p: &TestProblem, report: &PropertyReport, gamma: f64) {
    let again = recompute(p, report, gamma);
    assert!(
        (again - report.worst_violation).abs() <= 1e-12 * (1.0 + again.abs()),
        "{}: reported {:e}, recomputed {:e}",
        report.property,
        report.worst_violation,
        again
    );
    assert_eq!(report.passed, report.worst_violation >= -1e-9);
}

#[test]
fn failing_reports_carry_reproducible_witnesses() {
    let cubic_report = check_strong_quasiconvexity(&cubic(), 1.0, 2000, 3).unwrap();
    assert!(!cubic_report.passed);
    assert_sound(&cubic(), &cubic_report, 1.0);

    let e1 = example1();
    let big_gamma = check_strong_quasiconvexity(&e1, 10.0, 2000, 3).unwrap();
    assert!(!big_gamma.passed);
    assert_sound(&e1, &big_gamma, 10.0);

    let sig = check_gradient_characterization(&sigmoid_ratio(), 0.1, 2000, 3).unwrap();
    assert!(!sig.passed);
    assert_sound(&sigmoid_ratio(), &sig, 0.1);

    let mut inflated = example1();
    inflated.metadata.gamma *= 100.0;
    let growth = check_quadratic_growth(&inflated, 1000, 3).unwrap();
    assert!(!growth.passed);
    assert_sound(&inflated, &growth, 0.0);

    let mut halved = example1();
    halved.metadata.lipschitz_grad = 3.0;
    let descent = check_descent_lemma(&halved, 2000, 3).unwrap();
    assert!(!descent.passed);
    assert_sound(&halved, &descent, 0.0);
}

#[test]
fn passing_reports_on_example1() {
    let p = example1();
    for report in [
        check_strong_quasiconvexity(&p, 0.5, 2000, 21).unwrap(),
        check_pl(&p, 1000, 21).unwrap(),
        check_quadratic_growth(&p, 1000, 21).unwrap(),
        check_gradient_characterization(&p, 0.5, 2000, 21).unwrap(),
        check_descent_lemma(&p, 2000, 21).unwrap(),
    ] {
        assert!(report.passed, "{report:?}");
        assert_sound(&p, &report, 0.5);
    }
    // PL modulus gamma^2 / (2L) = 1/48 for this function.
    assert_eq!(
        p.metadata.gamma * p.metadata.gamma / (2.0 * p.metadata.lipschitz_grad),
        1.0 / 48.0
    );
}

#[test]
fn margins_vanish_at_the_minimizer() {
    let p = example1().with_test_box(vec![0.0], vec![0.0]).unwrap();
    assert_eq!(check_pl(&p, 5, 1).unwrap().worst_violation, 0.0);
    assert_eq!(
        check_quadratic_growth(&p, 5, 1).unwrap().worst_violation,
        0.0
    );
    // x = y: both sides of the pair inequalities are zero.
    assert_eq!(
        check_gradient_characterization(&p, 0.5, 5, 1)
            .unwrap()
            .worst_violation,
        0.0
    );
    assert_eq!(check_descent_lemma(&p, 5, 1).unwrap().worst_violation, 0.0);
}

#[test]
fn example1_quasar_modulus_is_at_least_gamma_over_l() {
    let est = estimate_kappa(&example1(), 5000, None, 5).unwrap();
    assert!(est.kappa_hat >= 1.0 / 12.0 - 1e-6, "{}", est.kappa_hat);
    assert!(est.samples > 4900);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Sample sets are nested, so more samples can only lower the worst margin.
    #[test]
    fn more_samples_never_hide_a_violation(seed in 0u64..10_000, n in 1usize..200, extra in 0usize..200) {
        let p = cubic();
        let small = check_strong_quasiconvexity(&p, 1.0, n, seed).unwrap();
        let large = check_strong_quasiconvexity(&p, 1.0, n + extra, seed).unwrap();
        prop_assert!(large.worst_violation <= small.worst_violation);
        prop_assert!(!( !small.passed && large.passed));
    }

    #[test]
    fn checkers_are_deterministic(seed in 0u64..10_000) {
        let p = example1();
        prop_assert_eq!(check_descent_lemma(&p, 50, seed).unwrap(), check_descent_lemma(&p, 50, seed).unwrap());
        prop_assert_eq!(estimate_kappa(&p, 50, None, seed).unwrap(), estimate_kappa(&p, 50, None, seed).unwrap());
    }
}
