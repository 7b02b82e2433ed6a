mod common;

use common::*;
use opspace::affine::min_spectral_over_affine;
use opspace::matrix::{CMat, C64};
use opspace::rng::{gaussian_mat, unitary};
use opspace::svd::{spectral_norm, svd, trace_norm};
use proptest::prelude::*;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn small_norms() {
    let nil = CMat::from_real(&[&[0.0, 2.0], &[0.0, 0.0]]);
    assert_eq!(spectral_norm(&CMat::identity(2)).unwrap(), 1.0);
    assert_eq!(spectral_norm(&nil).unwrap(), 2.0);
    assert_eq!(trace_norm(&CMat::identity(2)).unwrap(), 2.0);
    assert_eq!(trace_norm(&nil).unwrap(), 2.0);
}

#[test]
fn spectral_norm_matches_power_iteration() {
    let mut rng = rng(1, 0);
    for _ in 0..10 {
        let a = gaussian_mat(&mut rng, 4, 4);
        assert!((spectral_norm(&a).unwrap() - power_norm(&a)).abs() < 1e-8);
    }
}

#[test]
fn trace_norm_dominates_unitary_pairings() {
    let mut rng = rng(2, 0);
    let a = gaussian_mat(&mut rng, 3, 3);
    let t = trace_norm(&a).unwrap();
    let d = svd(&a);
    let best = (0..500)
        .map(|_| (&unitary(&mut rng, 3).adjoint() * &a).trace().norm())
        .fold(0.0, f64::max);
    assert!(best <= t + 1e-10);
    // the polar unitary attains it
    let polar = &d.u * &d.v.adjoint();
    assert!(((&polar.adjoint() * &a).trace().norm() - t).abs() < 1e-10);
}

#[test]
fn kron_and_direct_sum_examples() {
    assert_eq!(CMat::identity(2).kron(&CMat::identity(2)), CMat::identity(4));
    let e = CMat::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    assert_eq!(e.kron(&CMat::scalar(c(2.0))), CMat::from_real(&[&[0.0, 2.0], &[0.0, 0.0]]));
    assert_eq!(CMat::identity(1).direct_sum(&CMat::identity(1)), CMat::identity(2));
    let mut rng = rng(3, 0);
    let a = gaussian_mat(&mut rng, 3, 2);
    let z = CMat::zeros(2, 2).direct_sum(&a);
    assert!((spectral_norm(&z).unwrap() - power_norm(&a)).abs() < 1e-9);
}

#[test]
fn sandwich_examples() {
    let mut rng = rng(4, 0);
    let x = gaussian_mat(&mut rng, 3, 3);
    assert_eq!(CMat::sandwich(&CMat::identity(3), &x, &CMat::identity(3)).unwrap(), x);
    let two = CMat::identity(3).scale_re(2.0);
    assert!(CMat::sandwich(&two, &x, &CMat::identity(3)).unwrap().max_abs_diff(&x.scale_re(2.0)) < 1e-15);
}

#[test]
fn affine_minimum_matches_grid() {
    let target = CMat::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let dir = CMat::from_real(&[&[-1.0, 0.0], &[0.0, 1.0]]);
    let got = min_spectral_over_affine(&target, std::slice::from_ref(&dir)).unwrap();
    let grid = (-20000..=20000)
        .map(|i| {
            let t = i as f64 * 1e-4;
            power_norm(&(&target + &dir.scale_re(t)))
        })
        .fold(f64::INFINITY, f64::min);
    assert!(got.contains(grid, 1e-4), "{got:?} vs {grid}");
    assert!((grid - 0.5).abs() < 1e-8);
}

fn small_matrix() -> impl Strategy<Value = CMat> {
    (1usize..=4, 1usize..=4, any::<u64>()).prop_map(|(r, c, seed)| gaussian_mat(&mut rng(seed, 9), r, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_reconstructs(a in small_matrix()) {
        let d = svd(&a);
        let (m, n) = a.shape();
        let s = CMat::from_fn(m, n, |i, j| if i == j { c(d.s[i]) } else { c(0.0) });
        let back = &(&d.u * &s) * &d.v.adjoint();
        prop_assert!(back.max_abs_diff(&a) < 1e-12);
        prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn spectral_norm_is_kron_multiplicative(a in small_matrix(), b in small_matrix()) {
        let lhs = spectral_norm(&a.kron(&b)).unwrap();
        let rhs = spectral_norm(&a).unwrap() * spectral_norm(&b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1.0));
    }

    #[test]
    fn direct_sum_norm_is_max(a in small_matrix(), b in small_matrix()) {
        let lhs = spectral_norm(&a.direct_sum(&b)).unwrap();
        let rhs = spectral_norm(&a).unwrap().max(spectral_norm(&b).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn sandwich_is_bounded(seed in any::<u64>(), m in 1usize..4, n in 1usize..4) {
        let mut r = rng(seed, 10);
        let (al, x, be) = (gaussian_mat(&mut r, m, n), gaussian_mat(&mut r, n, n), gaussian_mat(&mut r, n, m));
        let lhs = spectral_norm(&CMat::sandwich(&al, &x, &be).unwrap()).unwrap();
        let bound = spectral_norm(&al).unwrap() * spectral_norm(&x).unwrap() * spectral_norm(&be).unwrap();
        prop_assert!(lhs <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn spectral_below_trace_below_rank_times_spectral(a in small_matrix()) {
        let s = spectral_norm(&a).unwrap();
        let (r, c) = a.shape();
        if r == c {
            let t = trace_norm(&a).unwrap();
            prop_assert!(s <= t + 1e-12 && t <= r as f64 * s + 1e-12);
        }
    }
}
