mod common;

use common::*;
use robust_bo_core::design::latin_hypercube;
use robust_bo_core::rng::{keyed_rng, stream};
use robust_bo_core::{
    ei_gaussian, ei_student_t, expected_improvement, maximize_acquisition, AcquisitionConfig, Bounds, Predictive,
};

#[test]
fn closed_forms_agree_with_monte_carlo() {
    let mut r = rng(40);
    for case in 0..20 {
        let mu = unif(&mut r, -2.0, 2.0);
        let sigma = unif(&mut r, 0.1, 3.0);
        let nu = unif(&mut r, 3.0, 30.0);
        let y_star = mu + sigma * unif(&mut r, -2.0, 2.0);
        let mut g = rng(1000 + case);
        let (m, se) = improvement_mc(1_000_000, mu, sigma, y_star, || normal(&mut g));
        let ei = ei_gaussian(&Predictive::gaussian(mu, sigma * sigma, false), y_star);
        assert!((ei - m).abs() <= 3.0 * se, "gaussian case {case}: {ei} vs {m} ± {se}");
        let mut t = rng(2000 + case);
        let (m, se) = improvement_mc(1_000_000, mu, sigma, y_star, || student_t_draw(&mut t, nu));
        let ei = ei_student_t(&Predictive::student_t(mu, sigma, nu, false), y_star).unwrap();
        assert!((ei - m).abs() <= 3.0 * se, "student-t case {case}: {ei} vs {m} ± {se}");
    }
}

#[test]
fn degenerate_and_limit_cases() {
    assert_eq!(ei_gaussian(&Predictive::gaussian(2.0, 0.0, false), 3.0), 1.0);
    assert_eq!(ei_gaussian(&Predictive::gaussian(4.0, 0.0, false), 3.0), 0.0);
    assert_eq!(ei_student_t(&Predictive::student_t(1.0, 0.0, 4.0, false), 3.0).unwrap(), 2.0);
    let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((ei_gaussian(&Predictive::gaussian(1.5, 1.0, false), 1.5) - phi0).abs() < 1e-15);
    assert!(ei_gaussian(&Predictive::gaussian(10.0, 0.01, false), 0.0) <= 1e-12);
    for (mu, s, y) in [(0.0, 1.0, 0.0), (1.0, 0.5, 0.2), (-1.0, 2.0, 0.5)] {
        let g = ei_gaussian(&Predictive::gaussian(mu, s * s, false), y);
        let t = ei_student_t(&Predictive::student_t(mu, s, 1e6, false), y).unwrap();
        assert!((g - t).abs() < 1e-6);
    }
    assert!(ei_student_t(&Predictive::student_t(0.0, 1.0, 1.0, false), 0.0).is_err());
    assert!(ei_student_t(&Predictive::gaussian(0.0, 1.0, false), 0.0).is_err());
}

#[test]
fn inner_optimizer_finds_narrow_basin() {
    let model = |x: &[f64]| Predictive::gaussian(1.0 - (-((x[0] - 0.3) / 0.02).powi(2)).exp(), 1e-6, false);
    let bounds = Bounds::unit(1);
    let best = maximize_acquisition(&model, 0.5, &bounds, &AcquisitionConfig::default(), 7);
    let grid_best = (0..10_000)
        .map(|i| i as f64 / 9_999.0)
        .max_by(|a, b| {
            let ea = expected_improvement(&model(&[*a]), 0.5);
            let eb = expected_improvement(&model(&[*b]), 0.5);
            ea.total_cmp(&eb)
        })
        .unwrap();
    assert!((grid_best - 0.3).abs() < 1e-3);
    assert!((best[0] - 0.3).abs() < 0.05, "returned {best:?}");
}

#[test]
fn result_beats_every_raw_candidate_and_stays_in_bounds() {
    let bounds = Bounds::new(vec![(-1.0, 2.0), (0.5, 0.75)]).unwrap();
    let model = |x: &[f64]| {
        let m = (x[0] - 1.1).powi(2) + 10.0 * (x[1] - 0.6).powi(2) + 0.3 * (5.0 * x[0]).sin();
        Predictive::gaussian(m, 0.01 + 0.05 * x[0].abs(), false)
    };
    for (seed, candidates) in [(1, 1000), (1, 2000), (2, 1000)] {
        let cfg = AcquisitionConfig { candidates, ..AcquisitionConfig::default() };
        let x = maximize_acquisition(&model, 0.0, &bounds, &cfg, seed);
        assert!(bounds.contains(&x));
        let cands = latin_hypercube(candidates, &bounds, &mut keyed_rng(seed, &[stream::ACQUISITION]));
        let raw = cands.row_iter().map(|c| expected_improvement(&model(c), 0.0)).fold(0.0, f64::max);
        assert!(expected_improvement(&model(&x), 0.0) >= raw);
        assert_eq!(x, maximize_acquisition(&model, 0.0, &bounds, &cfg, seed));
    }
    let flat = |_: &[f64]| Predictive::gaussian(0.0, 1.0, false);
    assert!(bounds.contains(&maximize_acquisition(&flat, 0.0, &bounds, &AcquisitionConfig::default(), 3)));
}
