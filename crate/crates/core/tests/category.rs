mod common;

use common::*;
use opspace::category::{
    self, coequaliser, equaliser, is_epimorphism, is_monomorphism, ConstructionKind, Pieces,
};
use opspace::config::Search;
use opspace::interval::Interval;
use opspace::maps::{is_complete_isometry, is_complete_quotient, OSMap};
use opspace::matrix::{CMat, C64};
use opspace::rng::gaussian_mat;
use opspace::space::coords;
use opspace::{LevelElement, OSpace};
use proptest::prelude::*;

#[test]
fn scalar_products_and_coproducts() {
    let c = OSpace::scalars();
    let p = category::product(&[c.clone(), c.clone()]);
    let q = category::coproduct(&[c.clone(), c.clone()], Search::default()).unwrap();
    let v = LevelElement::vector(&[C64::new(3.0, 0.0), C64::new(0.0, -4.0)]);
    assert_eq!(p.space.level_norm(&v).unwrap(), Interval::exact(4.0));
    assert_eq!(q.space.level_norm(&v).unwrap(), Interval::exact(7.0));
    for (i, inc) in q.inclusions.iter().enumerate() {
        assert!(is_complete_isometry(inc, 3, 6, 1e-6, i as u64).unwrap().holds());
    }
    for pr in &p.projections {
        assert!(is_complete_quotient(pr, 3, 6, 1e-6, 0).unwrap().holds());
    }
}

#[test]
fn product_cones() {
    let mut r = rng(20, 0);
    let parts = vec![random_space(&mut r, 2, 2).0, random_space(&mut r, 2, 3).0];
    let rep = category::verify_universal(ConstructionKind::Product, &Pieces::Family(parts), 50, 3).unwrap();
    assert!(rep.residual_commute <= 1e-9 && rep.residual_unique <= 1e-9);
}

#[test]
fn quotient_edge_cases() {
    let mut r = rng(21, 0);
    let (x, _) = random_space(&mut r, 2, 3);
    let (same, q) = category::quotient(&x, &CMat::zeros(3, 0)).unwrap();
    for n in 1..=2 {
        let e = random_element(&mut r, n, 3);
        let a = x.level_norm(&e).unwrap().hi;
        let b = same.level_norm(&q.apply(&e).unwrap()).unwrap();
        assert!(b.contains(a, 1e-8), "{a} {b:?}");
    }
    let (zero, _) = category::quotient(&x, &CMat::identity(3)).unwrap();
    assert_eq!(zero.dim(), 0);
}

#[test]
fn diagonal_quotient_matches_grid() {
    let diag = OSpace::diagonal(2);
    let (_, q) = category::quotient(&diag, &CMat::from_real(&[&[1.0], &[0.0]])).unwrap();
    let class = q.apply(&coords(&[0.0, 1.0])).unwrap();
    let got = q.cod().level_norm(&class).unwrap();
    // inf_t max(|t|, 1) on a grid
    let grid = (-20000..=20000).map(|i| (i as f64 * 1e-4).abs().max(1.0)).fold(f64::INFINITY, f64::min);
    assert!(got.contains(grid, 1e-6));
}

#[test]
fn limit_edge_cases() {
    let x = OSpace::matrix_algebra(2);
    let id = OSMap::identity(&x);
    let zero = OSMap::new(x.clone(), x.clone(), CMat::zeros(4, 4)).unwrap();
    assert_eq!(equaliser(&id, &id).unwrap().0.dim(), 4);
    assert_eq!(equaliser(&id, &zero).unwrap().0.dim(), 0);
    assert_eq!(coequaliser(&id, &id).unwrap().0.dim(), 4);
    assert_eq!(coequaliser(&id, &zero).unwrap().0.dim(), 0);
}

#[test]
fn dual_examples() {
    let c = OSpace::scalars();
    let dc = category::dual(&c, Search::default());
    assert!(dc.level_norm(&LevelElement::vector(&[C64::new(0.0, 2.0)])).unwrap().contains(2.0, 1e-9));
    let dm2 = category::dual(&OSpace::matrix_algebra(2), Search::default());
    let trace = coords(&[1.0, 0.0, 0.0, 1.0]);
    assert!(dm2.level_norm(&trace).unwrap().contains(2.0, 1e-6));
}

fn parallel(seed: u64) -> (OSMap, OSMap) {
    let mut r = rng(seed, 22);
    let x = OSpace::diagonal(3);
    let y = OSpace::diagonal(2);
    let f = gaussian_mat(&mut r, 2, 3);
    let g = &f - &(&gaussian_mat(&mut r, 2, 1) * &gaussian_mat(&mut r, 1, 3));
    (OSMap::new(x.clone(), y.clone(), f).unwrap(), OSMap::new(x, y, g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn equaliser_inclusion_is_isometric_mono(seed in any::<u64>()) {
        let (f, g) = parallel(seed);
        let (_, e) = equaliser(&f, &g).unwrap();
        prop_assert!(is_monomorphism(&e));
        prop_assert!(f.compose(&e).unwrap().coeff().max_abs_diff(g.compose(&e).unwrap().coeff()) <= 1e-12);
        prop_assert!(is_complete_isometry(&e, 2, 4, 1e-6, seed).unwrap().holds());
    }

    #[test]
    fn coequaliser_map_is_epi(seed in any::<u64>()) {
        let (f, g) = parallel(seed);
        let (_, q) = coequaliser(&f, &g).unwrap();
        prop_assert!(is_epimorphism(&q));
        prop_assert!(q.compose(&f).unwrap().coeff().max_abs_diff(q.compose(&g).unwrap().coeff()) <= 1e-12);
    }

    #[test]
    fn quotient_norm_is_at_most_the_norm(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed, 23);
        let (x, _) = random_space(&mut r, 2, 3);
        let k = gaussian_mat(&mut r, 3, 1);
        let (_, q) = category::quotient(&x, &k).unwrap();
        let e = random_element(&mut r, n, 3);
        let qe = q.cod().level_norm(&q.apply(&e).unwrap()).unwrap();
        prop_assert!(qe.lo <= x.level_norm(&e).unwrap().hi * (1.0 + 1e-9));
    }

    #[test]
    fn product_norm_is_block_max(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed, 24);
        let (x, bx) = random_space(&mut r, 2, 2);
        let (y, by) = random_space(&mut r, 2, 1);
        let p = category::product(&[x, y]);
        let a = random_element(&mut r, n, 2);
        let b = random_element(&mut r, n, 1);
        let got = p.space.level_norm(&LevelElement::concat(&[a.clone(), b.clone()]).unwrap()).unwrap();
        let want = oracle_norm(&bx, &a).max(oracle_norm(&by, &b));
        prop_assert!((got.hi - want).abs() <= 1e-9 * want);
    }
}
