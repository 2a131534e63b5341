//! Latin hypercube designs.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::linalg::Matrix;
use crate::optimize::Bounds;
use crate::rng::{self, stream};

/// Latin hypercube sample of `p` points in `bounds`: each axis is cut into
/// `p` equal strata, each stratum holds exactly one point, and strata are
/// matched across axes by an independent permutation per axis.
pub fn latin_hypercube<R: Rng + ?Sized>(p: usize, bounds: &Bounds, rng: &mut R) -> Matrix {
    let d = bounds.dim();
    let mut out = Matrix::zeros(p, d);
    let mut perm: Vec<usize> = (0..p).collect();
    for j in 0..d {
        perm.shuffle(rng);
        let (lo, hi) = bounds.interval(j);
        let width = (hi - lo) / p as f64;
        for (i, &stratum) in perm.iter().enumerate() {
            let u = rng::uniform(rng);
            out[(i, j)] = (lo + (stratum as f64 + u) * width).min(hi);
        }
    }
    out
}

/// Seeded initial design for a BO run.
pub fn initial_design(p: usize, bounds: &Bounds, seed: u64) -> Matrix {
    latin_hypercube(p, bounds, &mut rng::keyed_rng(seed, &[stream::INITIAL_DESIGN]))
}
