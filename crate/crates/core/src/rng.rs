//! Seeded random sampling of complex data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{CMat, C64};
use crate::svd::{spectral_norm_unchecked, svd};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream from a seed and a label.
pub fn derive(seed: u64, label: u64) -> SeededRng {
    let mixed = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .rotate_left(17)
        ^ label.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    ChaCha8Rng::seed_from_u64(mixed)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| gaussian(rng)).collect()
}

pub fn gaussian_mat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn real_gaussian_mat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), 0.0))
}

/// Haar-like unitary from the polar factor of a Gaussian matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let g = gaussian_mat(rng, n, n);
    let d = svd(&g);
    &d.u * &d.v.adjoint()
}

/// Random matrix with spectral norm at most one.
pub fn contraction<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let g = gaussian_mat(rng, rows, cols);
    let n = spectral_norm_unchecked(&g);
    if n == 0.0 {
        g
    } else {
        let t: f64 = rng.random_range(0.5..1.0);
        g.scale_re(t / n)
    }
}
