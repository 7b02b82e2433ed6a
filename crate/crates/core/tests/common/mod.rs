//! Independent oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use opspace::matrix::{CMat, C64};
use opspace::rng::{derive, gaussian_mat, gaussian_vec, SeededRng};
use opspace::{LevelElement, OSpace};

/// Spectral norm by power iteration on `A^* A`, independent of the SVD code.
pub fn power_norm(a: &CMat) -> f64 {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return 0.0;
    }
    let g = &a.adjoint() * a;
    let mut best = 0.0f64;
    for start in 0..3 {
        let mut v: Vec<C64> = (0..c)
            .map(|i| C64::new(1.0 + ((i * 7 + start * 3) % 5) as f64, (i as f64 + start as f64) * 0.37))
            .collect();
        let mut lam = 0.0;
        for _ in 0..2000 {
            let w = g.mat_vec(&v);
            let n = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if n == 0.0 {
                break;
            }
            let next: Vec<C64> = w.iter().map(|z| z / n).collect();
            let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).norm()).sum();
            v = next;
            lam = n;
            if diff < 1e-15 {
                break;
            }
        }
        best = best.max(lam);
    }
    best.sqrt()
}

/// `sum_s x_s (x) b_s` as an `nk x nk` matrix.
pub fn realize(basis: &[CMat], x: &LevelElement) -> CMat {
    let n = x.level();
    let k = basis[0].rows();
    let mut out = CMat::zeros(n * k, n * k);
    for i in 0..n {
        for j in 0..n {
            for (s, b) in basis.iter().enumerate() {
                let z = x.entry(i, j)[s];
                for a in 0..k {
                    for c in 0..k {
                        out[(i * k + a, j * k + c)] += z * b[(a, c)];
                    }
                }
            }
        }
    }
    out
}

pub fn oracle_norm(basis: &[CMat], x: &LevelElement) -> f64 {
    power_norm(&realize(basis, x))
}

pub fn rng(seed: u64, label: u64) -> SeededRng {
    derive(seed, label)
}

/// A random concrete space: dimension `d` inside `M_k`.
pub fn random_space(rng: &mut SeededRng, k: usize, d: usize) -> (OSpace, Vec<CMat>) {
    let basis: Vec<CMat> = (0..d).map(|_| gaussian_mat(rng, k, k)).collect();
    (OSpace::concrete(k, basis.clone()).expect("independent basis"), basis)
}

pub fn random_element(rng: &mut SeededRng, n: usize, d: usize) -> LevelElement {
    LevelElement::new(n, d, gaussian_vec(rng, n * n * d)).expect("sized")
}

pub fn line(id: usize, name: &str, pass: bool, detail: impl std::fmt::Display) {
    // straight to the stream so the line shows without --nocapture
    use std::io::Write;
    let text = format!("criterion {id:>2} {name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(text.as_bytes());
}
