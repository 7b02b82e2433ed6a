//! Randomised checks of the two matrix-norm axioms:
//! `||x (+) y|| = max(||x||, ||y||)` and `||a x b|| <= ||a|| ||x|| ||b||`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::OSpace;
use crate::element::LevelElement;
use crate::error::{invalid, Result};
use crate::interval::Interval;
use crate::rng::{derive, gaussian_mat, gaussian_vec};
use crate::svd::spectral_norm_unchecked;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuanReport {
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    /// Largest gap between the interval for `||x (+) y||` and the interval
    /// for `max(||x||, ||y||)`; zero when they overlap.
    pub max_m1_violation: f64,
    /// Largest excess of `||a x b||` over `||a|| ||x|| ||b||`.
    pub max_m2_violation: f64,
}

impl RuanReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_m1_violation <= tol && self.max_m2_violation <= tol
    }
}

pub fn check_ruan(x: &OSpace, n_max: usize, trials: usize, seed: u64) -> Result<RuanReport> {
    if n_max < 2 {
        return invalid("check_ruan needs n_max >= 2");
    }
    let d = x.dim();
    let mut rng = derive(seed, 0x5255_414E);
    let mut m1 = 0.0f64;
    let mut m2 = 0.0f64;
    if d > 0 {
        for _ in 0..trials {
            let p = rng.random_range(1..n_max);
            let q = rng.random_range(1..=n_max - p);
            let a = random_element(&mut rng, p, d);
            let b = random_element(&mut rng, q, d);
            let sum = x.norm(&a.direct_sum(&b)?);
            let mx = x.norm(&a).max(&x.norm(&b));
            m1 = m1.max(gap(&sum, &mx));

            let n = rng.random_range(1..=n_max);
            let m = rng.random_range(1..=n_max);
            let e = random_element(&mut rng, n, d);
            let alpha = gaussian_mat(&mut rng, m, n);
            let beta = gaussian_mat(&mut rng, n, m);
            let lhs = x.norm(&e.compress(&alpha, &beta)?);
            let bound = spectral_norm_unchecked(&alpha) * spectral_norm_unchecked(&beta) * x.norm(&e).hi;
            m2 = m2.max(lhs.lo - bound);
        }
    }
    Ok(RuanReport {
        n_max,
        trials,
        seed,
        max_m1_violation: m1,
        max_m2_violation: m2.max(0.0),
    })
}

fn random_element<R: Rng>(rng: &mut R, n: usize, d: usize) -> LevelElement {
    LevelElement::new(n, d, gaussian_vec(rng, n * n * d)).expect("sized")
}

/// Distance between two intervals; zero if they overlap.
fn gap(a: &Interval, b: &Interval) -> f64 {
    (a.lo - b.hi).max(b.lo - a.hi).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_algebra_passes() {
        let r = check_ruan(&OSpace::matrix_algebra(2), 3, 50, 1).unwrap();
        assert!(r.passes(1e-8), "{r:?}");
    }

    #[test]
    fn needs_two_levels() {
        assert!(check_ruan(&OSpace::scalars(), 1, 5, 0).is_err());
    }

    #[test]
    fn zero_space_is_trivial() {
        let r = check_ruan(&OSpace::zero(), 2, 5, 0).unwrap();
        assert_eq!(r.max_m1_violation, 0.0);
    }
}
