mod common;

use common::*;
use robust_bo_core::special::student_t_quantile;
use robust_bo_core::{classify_outliers, Dataset, FilterConfig, KernelParams, StudentTGp, StudentTLik};

fn fit(xs: &[Vec<f64>], y: &[f64]) -> StudentTGp {
    let data = Dataset::from_points(xs, y).unwrap();
    StudentTGp::fit_fixed(&data, &KernelParams::matern52(vec![0.3], 1.0).unwrap(), &StudentTLik::new(4.0, 0.05).unwrap())
        .unwrap()
}

fn curve(n: usize, phase: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
    let y = xs.iter().map(|x| (3.0 * x[0] + phase).sin()).collect();
    (xs, y)
}

fn classify(xs: &[Vec<f64>], y: &[f64]) -> robust_bo_core::ClassificationReport {
    let data = Dataset::from_points(xs, y).unwrap();
    classify_outliers(&data, &fit(xs, y), &FilterConfig::default()).unwrap()
}

/// Upper 95% point of t₄ by bisection on a quadrature CDF.
fn t4_upper_95() -> f64 {
    let pdf = |t: f64| 0.375 * (1.0 + t * t / 4.0).powf(-2.5);
    let cdf = |t: f64| 0.5 + simpson(pdf, 0.0, t, 2000);
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < 0.95 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn threshold_is_the_t4_quantile() {
    let q = t4_upper_95();
    assert!((q - 2.131_846_786_326_649).abs() < 1e-9, "{q}");
    assert!((student_t_quantile(0.95, 4.0) - q).abs() < 1e-9);
}

#[test]
fn points_on_the_mean_are_inliers() {
    let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
    let r = classify(&xs, &[0.0; 8]);
    assert_eq!(r.n_outliers, 0);
    assert!(!r.reverted);
    assert!(r.scores.iter().all(|s| *s == 0.0));
}

#[test]
fn ten_scale_displacement_is_always_flagged() {
    // Ten clean points, then an eleventh at `μ ± 10 s` under the clean
    // model's observation predictive at its location.
    let q = t4_upper_95();
    let mut r = rng(51);
    for case in 0..30 {
        let (mut xs, mut y) = curve(10, unif(&mut r, 0.0, 3.0));
        let model = fit(&xs, &y);
        let x_new = vec![unif(&mut r, 0.0, 1.0)];
        let p = model.predict_observation(&x_new);
        let sign = if case % 2 == 0 { 1.0 } else { -1.0 };
        xs.push(x_new);
        y.push(p.mean + sign * 10.0 * p.scale);
        let rep = classify(&xs, &y);
        let flagged: Vec<usize> = (0..11).filter(|&i| !rep.inlier_mask[i]).collect();
        assert_eq!(flagged, vec![10], "case {case}, scores {:?}", rep.scores);
        assert!(rep.scores[10].abs() > q);
    }
}

#[test]
fn majority_displacement_reverts_to_all_points() {
    let (xs, mut y) = curve(10, 0.3);
    for i in [0, 1, 2, 4, 6, 7, 9] {
        y[i] += 3.0 * if i % 2 == 0 { 1.0 } else { -1.0 };
    }
    let r = classify(&xs, &y);
    assert!(r.reverted);
    assert!(r.inlier_mask.iter().all(|m| *m));
    assert_eq!(r.n_outliers, 0);
}

#[test]
fn safeguard_fires_exactly_below_half() {
    let cfg = FilterConfig::default();
    let (lo, hi) = (student_t_quantile(cfg.alpha(), 4.0), student_t_quantile(1.0 - cfg.alpha(), 4.0));
    let mut r = rng(50);
    let (mut fired, mut kept) = (0, 0);
    for case in 0..200 {
        let t = 6 + case % 9;
        let (xs, mut y) = curve(t, unif(&mut r, 0.0, 3.0));
        let k = (case / 9) % (t + 1);
        for i in 0..k {
            let j = (i * 7 + case) % t;
            y[j] += unif(&mut r, 1.0, 4.0) * if normal(&mut r) > 0.0 { 1.0 } else { -1.0 };
        }
        let data = Dataset::from_points(&xs, &y).unwrap();
        let model = fit(&xs, &y);
        assert!(model.converged());
        let rep = classify_outliers(&data, &model, &cfg).unwrap();
        let raw_inliers = rep.scores.iter().filter(|z| **z >= lo && **z <= hi).count();
        assert_eq!(rep.reverted, raw_inliers < t / 2, "case {case}: {raw_inliers} of {t}");
        if rep.reverted {
            fired += 1;
            assert!(rep.inlier_mask.iter().all(|m| *m));
        } else {
            kept += 1;
            assert_eq!(rep.inlier_mask.iter().filter(|m| !**m).count(), t - raw_inliers);
        }
    }
    assert!(fired > 0 && kept > 0, "fired {fired}, kept {kept}");
}

#[test]
fn flagged_point_is_restored_once_it_returns() {
    let (xs, y) = curve(10, 0.7);
    let mut dirty = y.clone();
    dirty[4] += 2.0;
    assert!(!classify(&xs, &dirty).inlier_mask[4]);
    dirty[4] = y[4] + 0.01;
    let r = classify(&xs, &dirty);
    assert!(r.inlier_mask[4]);
    assert_eq!(r.n_outliers, 0);
}

#[test]
fn classification_is_idempotent_and_order_free() {
    let (xs, mut y) = curve(11, 1.3);
    y[3] += 1.5;
    y[8] -= 2.0;
    let data = Dataset::from_points(&xs, &y).unwrap();
    let model = fit(&xs, &y);
    let a = classify_outliers(&data, &model, &FilterConfig::default()).unwrap();
    let b = classify_outliers(&data, &model, &FilterConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_outliers, 2);
    let order: Vec<usize> = vec![10, 3, 0, 7, 5, 1, 9, 2, 8, 4, 6];
    let xs2: Vec<Vec<f64>> = order.iter().map(|&i| xs[i].clone()).collect();
    let y2: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let c = classify(&xs2, &y2);
    for (k, &i) in order.iter().enumerate() {
        assert_eq!(c.inlier_mask[k], a.inlier_mask[i]);
    }
}
