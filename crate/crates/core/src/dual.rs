//! Norms on duals: `M_m(X^*)` is identified with maps `X -> M_m`.
//!
//! A grid `[f_ij]` of functionals is the map `x -> [f_ij(x)]` and its norm
//! is that map's cb norm, which for maps into `M_m` is the norm of the
//! `m`-th amplification.

use crate::config::{Budget, Search};
use crate::element::LevelElement;
use crate::interval::Interval;
use crate::maps::{op_norm_at_level, OSMap};
use crate::matrix::CMat;
use crate::space::{functional_norm, OSpace, Structure};
use crate::svd::trace_norm;

/// The map `X -> M_m` induced by a level-`m` grid of functionals.
pub fn induced_map(parent: &OSpace, f: &LevelElement) -> OSMap {
    let m = f.level();
    let d = parent.dim();
    let coeff = CMat::from_fn(m * m, d, |ij, s| f.entry(ij / m, ij % m)[s]);
    OSMap::new(parent.clone(), OSpace::matrix_algebra(m), coeff).expect("sized")
}

fn budget(search: &Search) -> Budget {
    Budget {
        restarts: search.restarts,
        iterations: search.iterations,
        ..Budget::default()
    }
}

pub(crate) fn dual_norm(parent: &OSpace, f: &LevelElement, search: &Search) -> Interval {
    if f.is_zero() {
        return Interval::ZERO;
    }
    match parent.structure() {
        // Finite-dimensional spaces are completely reflexive.
        Structure::Dual { parent: inner, .. } => return inner.norm(f),
        // The pairing identifies the dual of T_n with M_n.
        Structure::TraceClass { n, .. } => return OSpace::matrix_algebra(*n).norm(f),
        _ => {}
    }
    if f.level() == 1 {
        if let Some(form) = parent.concrete_form() {
            return functional_norm(&form, f.data());
        }
    }
    let u = induced_map(parent, f);
    op_norm_at_level(&u, f.level(), &budget(search), search.seed)
        .unwrap_or_else(|_| Interval::approximate(0.0, f64::INFINITY))
}

pub(crate) fn dual_upper(parent: &OSpace, f: &LevelElement) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    match parent.structure() {
        Structure::Dual { parent: inner, .. } => return inner.norm_hi(f),
        Structure::TraceClass { n, .. } => return OSpace::matrix_algebra(*n).norm_hi(f),
        _ => {}
    }
    if f.level() == 1 {
        if let Some(form) = parent.concrete_form() {
            return functional_norm(&form, f.data()).hi;
        }
    }
    induced_map(parent, f).cb_upper()
}

fn coefficient_matrix(n: usize, x: &LevelElement) -> CMat {
    CMat::from_vec(n, n, x.data().to_vec()).expect("n^2 coordinates")
}

pub(crate) fn trace_class_norm(n: usize, x: &LevelElement, search: &Search) -> Interval {
    if x.level() == 1 {
        return Interval::exact(trace_norm(&coefficient_matrix(n, x)).expect("finite"));
    }
    dual_norm(&OSpace::matrix_algebra(n), x, search)
}

pub(crate) fn trace_class_upper(n: usize, x: &LevelElement) -> f64 {
    if x.level() == 1 {
        return trace_norm(&coefficient_matrix(n, x)).expect("finite");
    }
    dual_upper(&OSpace::matrix_algebra(n), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;

    #[test]
    fn trace_functional_has_norm_dimension() {
        let d = OSpace::matrix_algebra(2).dual(Search::default());
        let f = LevelElement::vector(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(d.level_norm(&f).unwrap().contains(2.0, 1e-8));
    }

    #[test]
    fn scalars_are_self_dual() {
        let d = OSpace::scalars().dual(Search::default());
        let z = LevelElement::vector(&[C64::new(3.0, 4.0)]);
        assert!(d.level_norm(&z).unwrap().contains(5.0, 1e-8));
    }

    #[test]
    fn trace_class_level_one_is_trace_norm() {
        let t = OSpace::trace_class(2, Search::default()).unwrap();
        let id = LevelElement::vector(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(t.level_norm(&id).unwrap(), Interval::exact(2.0));
        let e12 = LevelElement::vector(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!((t.level_norm(&e12).unwrap().hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_dual_matches_original() {
        let m = OSpace::matrix_algebra(2);
        let dd = m.dual(Search::default()).dual(Search::default());
        let x = LevelElement::vector(&[C64::new(0.0, 0.0), C64::new(2.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(dd.level_norm(&x).unwrap().contains(2.0, 1e-9));
    }

    #[test]
    fn level_two_trace_class_norm_brackets_identity_grid() {
        // The grid [e_ij] in M_2(T_2) is the identity map M_2 -> M_2.
        let t = OSpace::trace_class(2, Search::default()).unwrap();
        let grid = LevelElement::from_fn(2, 4, |i, j, s| {
            if s == i * 2 + j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let v = t.level_norm(&grid).unwrap();
        assert!(v.contains(1.0, 1e-6), "{v:?}");
    }
}
