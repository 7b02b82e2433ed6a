mod common;

use common::*;
use opspace::config::Budget;
use opspace::maps::{is_complete_contraction, OSMap};
use opspace::matrix::{CMat, C64};
use opspace::space::coords;
use opspace::svd::trace_norm;
use opspace::trace_class::{generator_witness, identity_grid, lemma_contraction, make_tn};
use opspace::{LevelElement, OSpace};
use proptest::prelude::*;

#[test]
fn level_one_is_the_trace_norm() {
    let t2 = make_tn(2).unwrap();
    assert!(t2.level_norm(&coords(&[1.0, 0.0, 0.0, 1.0])).unwrap().contains(2.0, 1e-12));
    assert!(t2.level_norm(&coords(&[0.0, 1.0, 0.0, 0.0])).unwrap().contains(1.0, 1e-12));
    let mut r = rng(60, 0);
    for _ in 0..10 {
        let e = random_element(&mut r, 1, 9);
        let want = trace_norm(&CMat::from_fn(3, 3, |i, j| e.data()[i * 3 + j])).unwrap();
        assert!(make_tn(3).unwrap().level_norm(&e).unwrap().contains(want, 1e-9));
    }
}

#[test]
fn scalar_lemma_is_the_unitor() {
    let c = OSpace::scalars();
    let u = lemma_contraction(&c, &LevelElement::vector(&[C64::new(1.0, 0.0)])).unwrap();
    assert_eq!(u.coeff(), &CMat::identity(1));
    assert!(u.dom().same_as(&make_tn(1).unwrap()));
}

#[test]
fn proper_inclusion_with_distorted_norm() {
    let m2 = OSpace::matrix_algebra(2);
    let vecs = CMat::from_real(&[&[1.0], &[0.0], &[0.0], &[0.0]]);
    let copy = m2.subspace(&vecs).unwrap();
    let m = OSMap::new(copy, m2, vecs.scale_re(0.5)).unwrap();
    let w = generator_witness(&m, 2, 4, 1e-6, 1).unwrap().unwrap();
    assert_eq!(w.n, 1);
    assert!((w.fiber_min_norm - 2.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lemma_maps_recover_grids_and_contract(seed in any::<u64>(), d in 1usize..=4) {
        let mut r = rng(seed, 61);
        let (x, basis) = random_space(&mut r, 2, d);
        let raw = random_element(&mut r, 2, d);
        let grid = raw.scale_re(1.0 / (oracle_norm(&basis, &raw) * (1.0 + 1e-9)));
        let u = lemma_contraction(&x, &grid).unwrap();
        prop_assert_eq!(u.apply(&identity_grid(2)).unwrap().max_abs_diff(&grid), 0.0);
        prop_assert!(!is_complete_contraction(&u, 2, 1e-6, &Budget::light(), seed).unwrap().fails());
    }
}
