mod common;

use common::*;
use robust_bo_core::objective::sample_gp_function;
use robust_bo_core::{corrupt, Bounds, KernelParams, OutlierModel, SyntheticObjective};

#[test]
fn first_query_is_marginally_prior() {
    let sv = 1.7;
    let k = KernelParams::matern52(vec![0.1, 0.1], sv).unwrap();
    for x in [[0.0, 0.0], [0.3, 0.8], [1.0, 0.5]] {
        let draws: Vec<f64> = (0..500).map(|s| SyntheticObjective::new(&k, s).query(&x).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / 500.0;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 499.0;
        assert!(mean.abs() < 4.0 * sv.sqrt() / 500f64.sqrt(), "{x:?}: mean {mean}");
        assert!((var / sv - 1.0).abs() < 0.2, "{x:?}: var {var}");
    }
}

#[test]
fn pair_covariance_matches_kernel() {
    let ls = [0.3];
    let k = KernelParams::matern52(ls.to_vec(), 1.0).unwrap();
    for (a, b) in [(0.2, 0.25), (0.5, 0.6), (0.1, 0.3), (0.7, 0.75)] {
        let pairs: Vec<(f64, f64)> = (0..500)
            .map(|s| {
                let mut f = SyntheticObjective::new(&k, 1000 + s);
                (f.query(&[a]).unwrap(), f.query(&[b]).unwrap())
            })
            .collect();
        let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0 / 500.0, y + p.1 / 500.0));
        let cov = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>() / 499.0;
        let truth = matern(&[a], &[b], &ls, 1.0);
        assert!((cov - truth).abs() <= 0.15 * truth, "({a}, {b}): {cov} vs {truth}");
    }
}

#[test]
fn path_is_consistent_and_order_determined() {
    let k = KernelParams::matern52(vec![0.2, 0.2], 1.0).unwrap();
    let pts = [[0.1, 0.1], [0.9, 0.4], [0.5, 0.5], [0.1, 0.1], [0.2, 0.8]];
    let run = || {
        let mut f = sample_gp_function(&k, 2, 77).unwrap();
        pts.iter().map(|p| f.query(p).unwrap()).collect::<Vec<_>>()
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a[0], a[3]);
}

#[test]
fn anchors_pin_the_path_regardless_of_query_order() {
    let k = KernelParams::matern52(vec![0.3, 0.3], 1.0).unwrap();
    let bounds = Bounds::unit(2);
    let mut f = SyntheticObjective::new(&k, 9);
    let mut g = SyntheticObjective::new(&k, 9);
    f.anchor(&bounds, 300).unwrap();
    g.anchor(&bounds, 300).unwrap();
    let q = [[0.31, 0.62], [0.77, 0.05], [0.5, 0.5]];
    let a: Vec<f64> = q.iter().map(|x| f.query(x).unwrap()).collect();
    let b: Vec<f64> = q.iter().rev().map(|x| g.query(x).unwrap()).collect();
    for (u, v) in a.iter().zip(b.iter().rev()) {
        assert!((u - v).abs() < 1e-3, "{u} vs {v}");
    }
}

#[test]
fn corruption_is_nested_in_rate_and_hits_at_the_rate() {
    let lo = OutlierModel::new(0.1).unwrap();
    let hi = OutlierModel::new(0.2).unwrap();
    let (mut n_lo, mut n_hi) = (0, 0);
    for it in 0..20_000 {
        let (v1, o1) = corrupt(0.4, &lo, it, 31);
        let (v2, o2) = corrupt(0.4, &hi, it, 31);
        if o1 {
            assert!(o2);
            assert_eq!(v1, v2);
            assert!((1.0..=2.0).contains(&v1));
        } else {
            assert_eq!(v1, 0.4);
        }
        n_lo += o1 as usize;
        n_hi += o2 as usize;
    }
    // Binomial standard errors are about 0.002 and 0.0028.
    assert!((n_lo as f64 / 20_000.0 - 0.1).abs() < 0.01);
    assert!((n_hi as f64 / 20_000.0 - 0.2).abs() < 0.012);
    assert_eq!(corrupt(7.0, &lo, 3, 31), corrupt(7.0, &lo, 3, 31));
}
