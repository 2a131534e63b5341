//! Reference implementations for the numerical tests. Everything here is
//! written independently of the library: dense inverses instead of
//! Cholesky, brute-force quadrature instead of closed forms.

#![allow(dead_code)]

use robust_bo_core::rng::{keyed_rng, standard_normal, uniform, KeyedRng};

pub fn rng(seed: u64) -> KeyedRng {
    keyed_rng(seed, &[0xACCE])
}

pub fn unif(r: &mut KeyedRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(r)
}

pub fn normal(r: &mut KeyedRng) -> f64 {
    standard_normal(r)
}

pub fn matern52_shape(r: f64) -> f64 {
    (1.0 + r + r * r / 3.0) * (-r).exp()
}

pub fn rq_shape(r: f64, alpha: f64) -> f64 {
    (1.0 + r * r / (2.0 * alpha)).powf(-alpha)
}

pub fn scaled_distance(x: &[f64], z: &[f64], ls: &[f64]) -> f64 {
    x.iter().zip(z).zip(ls).map(|((a, b), l)| ((a - b) / l).powi(2)).sum::<f64>().sqrt()
}

pub fn matern(x: &[f64], z: &[f64], ls: &[f64], sv: f64) -> f64 {
    sv * matern52_shape(scaled_distance(x, z, ls))
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        assert!(piv != 0.0, "singular matrix");
        for v in m[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    let pivot_row = m[c].clone();
                    for (v, p) in m[r].iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Matérn Gram matrix with `noise + 1e-8·sv` on the diagonal.
pub fn gram(xs: &[Vec<f64>], ls: &[f64], sv: f64, noise: f64) -> Vec<Vec<f64>> {
    xs.iter()
        .enumerate()
        .map(|(i, a)| {
            xs.iter()
                .enumerate()
                .map(|(j, b)| matern(a, b, ls, sv) + if i == j { noise + 1e-8 * sv } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Posterior mean and latent variance of a zero-mean Matérn GP, by
/// explicit inversion.
pub fn gp_dense(xs: &[Vec<f64>], y: &[f64], ls: &[f64], sv: f64, noise: f64, xq: &[f64]) -> (f64, f64) {
    let kinv = invert(&gram(xs, ls, sv, noise));
    let k: Vec<f64> = xs.iter().map(|x| matern(x, xq, ls, sv)).collect();
    let mean = inner(&k, &mat_vec(&kinv, y));
    let var = sv - inner(&k, &mat_vec(&kinv, &k));
    (mean, var)
}

pub fn gp_dense_lml(xs: &[Vec<f64>], y: &[f64], ls: &[f64], sv: f64, noise: f64) -> f64 {
    let k = gram(xs, ls, sv, noise);
    let kinv = invert(&k);
    let quad = inner(y, &mat_vec(&kinv, y));
    -0.5 * quad - 0.5 * log_det(&k) - 0.5 * y.len() as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// `ln |A|` by Gaussian elimination (A positive definite).
pub fn log_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        acc += m[c][c].abs().ln();
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            let pivot_row = m[c].clone();
            for (v, p) in m[r].iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
    }
    acc
}

/// Lanczos approximation (g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut s = G[0];
    for (i, g) in G.iter().enumerate().skip(1) {
        s += g / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

pub fn normal_pdf(y: f64, mean: f64, var: f64) -> f64 {
    (-(y - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// Composite Simpson rule on `[lo, hi]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Predictive density of the hierarchical model
/// `y | s² ~ N(0, s² K̃)`, `s² ~ IG(a, b)` at a new point whose conditional
/// Gaussian (given `s² = 1`) has mean `mu` and variance `var`, after
/// observing data with quadratic form `q = yᵀK̃⁻¹y` and size `t`.
/// Integrates over `u = ln s²`.
pub fn hierarchical_predictive(y_q: f64, mu: f64, var: f64, q: f64, t: usize, a: f64, b: f64) -> f64 {
    let post = |u: f64| (-(a + 0.5 * t as f64) * u - (b + 0.5 * q) * (-u).exp()).exp();
    // Centre the grid on the posterior mode of u for accuracy.
    let mode = ((b + 0.5 * q) / (a + 0.5 * t as f64)).ln();
    let (lo, hi) = (mode - 8.0, mode + 40.0);
    let scale = post(mode);
    let z = simpson(|u| post(u) / scale, lo, hi, 40_000);
    let num = simpson(|u| post(u) / scale * normal_pdf(y_q, mu, u.exp() * var), lo, hi, 40_000);
    num / z
}

/// `∫ N(y | 0, s² k) IG(s² | a, b) ds²` for a single observation.
pub fn hierarchical_marginal_1d(y: f64, k: f64, a: f64, b: f64) -> f64 {
    let ln_prior_norm = a * b.ln() - ln_gamma(a);
    let integrand = |u: f64| {
        let s2 = u.exp();
        let ln_prior = ln_prior_norm - (a + 1.0) * u - b / s2;
        normal_pdf(y, 0.0, s2 * k) * (ln_prior + u).exp()
    };
    simpson(integrand, -30.0, 40.0, 80_000)
}

/// Lower Cholesky factor, textbook loop.
pub fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                l[i][i] = (a[i][i] - s).sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    l
}

/// Random dataset on the unit cube: `t` points in `d` dimensions with
/// standard normal targets.
pub fn random_points(r: &mut KeyedRng, t: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs = (0..t).map(|_| (0..d).map(|_| uniform(r)).collect()).collect();
    let y = (0..t).map(|_| standard_normal(r)).collect();
    (xs, y)
}

/// One draw of a zero-mean Matérn GP at `xs` (plus `noise` variance).
pub fn gp_draw(r: &mut KeyedRng, xs: &[Vec<f64>], ls: &[f64], sv: f64, noise: f64) -> Vec<f64> {
    let l = cholesky(&gram(xs, ls, sv, noise));
    let z: Vec<f64> = (0..xs.len()).map(|_| standard_normal(r)).collect();
    mat_vec(&l, &z)
}

/// Marsaglia-Tsang gamma draw with unit scale.
pub fn gamma_draw(r: &mut KeyedRng, shape: f64) -> f64 {
    if shape < 1.0 {
        let u = uniform(r);
        return gamma_draw(r, shape + 1.0) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(r);
        let v = (1.0 + c * x).powi(3);
        if v <= 0.0 {
            continue;
        }
        let u = uniform(r);
        if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
            return d * v;
        }
    }
}

/// Standard Student-t draw as `Z / √(V/ν)`, `V ~ χ²_ν`.
pub fn student_t_draw(r: &mut KeyedRng, dof: f64) -> f64 {
    let z = standard_normal(r);
    let v = 2.0 * gamma_draw(r, 0.5 * dof);
    z / (v / dof).sqrt()
}

/// Monte Carlo mean and standard error of `max(0, y* - Y)` with
/// `Y = mu + sigma·draw()`.
pub fn improvement_mc(n: usize, mu: f64, sigma: f64, y_star: f64, mut draw: impl FnMut() -> f64) -> (f64, f64) {
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let imp = (y_star - (mu + sigma * draw())).max(0.0);
        s += imp;
        s2 += imp * imp;
    }
    let mean = s / n as f64;
    let var = (s2 / n as f64 - mean * mean) * n as f64 / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}
