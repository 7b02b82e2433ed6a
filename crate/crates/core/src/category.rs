//! Limits and colimits of operator spaces with their universal maps.

use serde::{Deserialize, Serialize};

use crate::config::Search;
use crate::error::{invalid, shape, Result};
use crate::maps::{is_complete_isometry, OSMap, Verdict};
use crate::matrix::{CMat, C64};
use crate::rng::{derive, gaussian_mat};
use crate::space::{OSpace, Structure};
use crate::svd::{null_space, pinv, range_basis};

const RANK_TOL: f64 = 1e-10;

/// A product or coproduct with its canonical maps.
#[derive(Debug, Clone)]
pub struct Biproduct {
    pub space: OSpace,
    pub parts: Vec<OSpace>,
    pub projections: Vec<OSMap>,
    pub inclusions: Vec<OSMap>,
}

fn canonical_maps(space: &OSpace, parts: &[OSpace]) -> (Vec<OSMap>, Vec<OSMap>) {
    let total = space.dim();
    let mut off = 0;
    let mut proj = vec![];
    let mut inc = vec![];
    for p in parts {
        let d = p.dim();
        let pc = CMat::from_fn(d, total, |a, b| if b == off + a { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        inc.push(OSMap::new(p.clone(), space.clone(), pc.transpose()).expect("sized"));
        proj.push(OSMap::new(space.clone(), p.clone(), pc).expect("sized"));
        off += d;
    }
    (proj, inc)
}

/// The l^inf product. An empty family gives the zero space.
pub fn product(parts: &[OSpace]) -> Biproduct {
    let space = OSpace::product(parts.to_vec());
    let (projections, inclusions) = canonical_maps(&space, parts);
    Biproduct {
        space,
        parts: parts.to_vec(),
        projections,
        inclusions,
    }
}

/// The l^1 coproduct.
pub fn coproduct(parts: &[OSpace], search: Search) -> Result<Biproduct> {
    let space = OSpace::coproduct(parts.to_vec(), search)?;
    let (projections, inclusions) = canonical_maps(&space, parts);
    Ok(Biproduct {
        space,
        parts: parts.to_vec(),
        projections,
        inclusions,
    })
}

/// `x -> (f_1(x), ..., f_k(x))` into a product.
pub fn product_mediator(prod: &Biproduct, cone: &[OSMap]) -> Result<OSMap> {
    if cone.len() != prod.parts.len() || cone.is_empty() {
        return invalid("cone must have one map per factor");
    }
    let w = cone[0].dom().clone();
    for (f, p) in cone.iter().zip(&prod.parts) {
        if f.dom().dim() != w.dim() || f.cod().dim() != p.dim() {
            return shape("cone maps do not match the product");
        }
    }
    let blocks: Vec<CMat> = cone.iter().map(|f| f.coeff().clone()).collect();
    OSMap::new(w, prod.space.clone(), CMat::vstack(&blocks)?)
}

/// `sum_k u_k(x_k)` out of a coproduct.
pub fn coproduct_mediator(co: &Biproduct, cocone: &[OSMap]) -> Result<OSMap> {
    if cocone.len() != co.parts.len() || cocone.is_empty() {
        return invalid("cocone must have one map per summand");
    }
    let w = cocone[0].cod().clone();
    for (u, p) in cocone.iter().zip(&co.parts) {
        if u.cod().dim() != w.dim() || u.dom().dim() != p.dim() {
            return shape("cocone maps do not match the coproduct");
        }
    }
    let blocks: Vec<CMat> = cocone.iter().map(|u| u.coeff().clone()).collect();
    OSMap::new(co.space.clone(), w, CMat::hstack(&blocks)?)
}

fn check_parallel(f: &OSMap, g: &OSMap) -> Result<()> {
    if f.dom().dim() != g.dom().dim() || f.cod().dim() != g.cod().dim() {
        return shape("maps are not parallel");
    }
    Ok(())
}

/// The subspace `{x : f(x) = g(x)}` of the domain with its inclusion.
pub fn equaliser(f: &OSMap, g: &OSMap) -> Result<(OSpace, OSMap)> {
    check_parallel(f, g)?;
    let ker = null_space(f.difference(g)?.coeff(), RANK_TOL);
    if ker.cols() == 0 {
        let z = OSpace::zero();
        return Ok((z.clone(), OSMap::zero(&z, f.dom())));
    }
    let e = f.dom().subspace(&ker)?;
    let inc = OSMap::new(e.clone(), f.dom().clone(), ker)?;
    Ok((e, inc))
}

/// The quotient of `x` by the span of the given columns, with its quotient map.
pub fn quotient(x: &OSpace, kernel_vectors: &CMat) -> Result<(OSpace, OSMap)> {
    let q = x.quotient(kernel_vectors)?;
    if q.dim() == 0 {
        return Ok((q.clone(), OSMap::zero(x, &q)));
    }
    let lift = match x.structure() {
        Structure::Quotient { complement, .. } => complement.clone(),
        _ => CMat::identity(x.dim()),
    };
    let coeff = match q.structure() {
        Structure::Quotient { complement, .. } => complement.adjoint().matmul(&lift)?,
        _ => unreachable!("non-trivial quotients keep their structure"),
    };
    let map = OSMap::new(x.clone(), q.clone(), coeff)?;
    Ok((q, map))
}

/// `cod / image(f - g)` with its quotient map.
pub fn coequaliser(f: &OSMap, g: &OSMap) -> Result<(OSpace, OSMap)> {
    check_parallel(f, g)?;
    let d = f.difference(g)?;
    let img = if d.is_zero() {
        CMat::zeros(f.cod().dim(), 0)
    } else {
        range_basis(d.coeff(), RANK_TOL)
    };
    quotient(f.cod(), &img)
}

pub fn dual(x: &OSpace, search: Search) -> OSpace {
    x.dual(search)
}

pub fn min_quantization(x: &OSpace, search: Search) -> OSpace {
    x.min_quantization(search)
}

/// The unique `k` with `e o k = h`, for `e` injective.
pub fn factor_through_equaliser(e: &OSMap, h: &OSMap) -> Result<OSMap> {
    if h.cod().dim() != e.cod().dim() {
        return shape("map does not land in the equaliser's ambient space");
    }
    let k = pinv(e.coeff(), RANK_TOL).matmul(h.coeff())?;
    OSMap::new(h.dom().clone(), e.dom().clone(), k)
}

/// The unique `h_hat` with `h_hat o q = h`, for `q` surjective.
pub fn factor_through_coequaliser(q: &OSMap, h: &OSMap) -> Result<OSMap> {
    if h.dom().dim() != q.dom().dim() {
        return shape("map does not start at the coequaliser's source");
    }
    let k = h.coeff().matmul(&pinv(q.coeff(), RANK_TOL))?;
    OSMap::new(q.cod().clone(), h.cod().clone(), k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionKind {
    Product,
    Coproduct,
    Equaliser,
    Coequaliser,
}

/// Inputs to a universal-property check.
#[derive(Debug, Clone)]
pub enum Pieces {
    Family(Vec<OSpace>),
    Parallel(OSMap, OSMap),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeReport {
    pub kind: ConstructionKind,
    /// Largest entry of `(mediator composed with the canonical maps) - cone`.
    pub residual_commute: f64,
    /// Distance from the mediator to any other commuting map; at least 1
    /// when the commuting maps are not unique.
    pub residual_unique: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip)]
    pub mediator: Option<OSMap>,
}

fn test_object(d: usize) -> OSpace {
    OSpace::diagonal(d)
}

/// Builds random (co)cones, their mediating maps, and measures commutation
/// and uniqueness.
pub fn verify_universal(kind: ConstructionKind, pieces: &Pieces, trials: usize, seed: u64) -> Result<ConeReport> {
    let mut rng = derive(seed, 0xC0AE);
    let mut commute = 0.0f64;
    let mut unique = 0.0f64;
    let mut last = None;
    match (kind, pieces) {
        (ConstructionKind::Product, Pieces::Family(parts)) | (ConstructionKind::Coproduct, Pieces::Family(parts)) => {
            if parts.is_empty() {
                return invalid("family must be nonempty");
            }
            let obj = if kind == ConstructionKind::Product {
                product(parts)
            } else {
                coproduct(parts, Search::default())?
            };
            // Stacked canonical maps; the mediator solves one linear system.
            let (canon, solve_left) = if kind == ConstructionKind::Product {
                let c: Vec<CMat> = obj.projections.iter().map(|p| p.coeff().clone()).collect();
                (CMat::vstack(&c)?, true)
            } else {
                let c: Vec<CMat> = obj.inclusions.iter().map(|p| p.coeff().clone()).collect();
                (CMat::hstack(&c)?, false)
            };
            let freedom = if solve_left {
                null_space(&canon, RANK_TOL).cols()
            } else {
                null_space(&canon.transpose(), RANK_TOL).cols()
            };
            for t in 0..trials {
                let w = test_object(1 + t % 3);
                if kind == ConstructionKind::Product {
                    let cone: Vec<OSMap> = parts
                        .iter()
                        .map(|p| OSMap::new(w.clone(), p.clone(), gaussian_mat(&mut rng, p.dim(), w.dim())).expect("sized"))
                        .collect();
                    let m = product_mediator(&obj, &cone)?;
                    for (pr, f) in obj.projections.iter().zip(&cone) {
                        commute = commute.max(pr.compose(&m)?.coeff().max_abs_diff(f.coeff()));
                    }
                    let rhs = CMat::vstack(&cone.iter().map(|f| f.coeff().clone()).collect::<Vec<_>>())?;
                    let other = pinv(&canon, RANK_TOL).matmul(&rhs)?;
                    unique = unique.max(other.max_abs_diff(m.coeff()) + if freedom > 0 { 1.0 } else { 0.0 });
                    last = Some(m);
                } else {
                    let cocone: Vec<OSMap> = parts
                        .iter()
                        .map(|p| OSMap::new(p.clone(), w.clone(), gaussian_mat(&mut rng, w.dim(), p.dim())).expect("sized"))
                        .collect();
                    let m = coproduct_mediator(&obj, &cocone)?;
                    for (inc, u) in obj.inclusions.iter().zip(&cocone) {
                        commute = commute.max(m.compose(inc)?.coeff().max_abs_diff(u.coeff()));
                    }
                    let rhs = CMat::hstack(&cocone.iter().map(|u| u.coeff().clone()).collect::<Vec<_>>())?;
                    let other = rhs.matmul(&pinv(&canon, RANK_TOL))?;
                    unique = unique.max(other.max_abs_diff(m.coeff()) + if freedom > 0 { 1.0 } else { 0.0 });
                    last = Some(m);
                }
            }
        }
        (ConstructionKind::Equaliser, Pieces::Parallel(f, g)) => {
            let (e_space, e) = equaliser(f, g)?;
            let freedom = null_space(e.coeff(), RANK_TOL).cols();
            for t in 0..trials {
                let w = test_object(1 + t % 3);
                // Every h with f h = g h is e k for some k.
                let k = gaussian_mat(&mut rng, e_space.dim(), w.dim());
                let h = OSMap::new(w.clone(), f.dom().clone(), e.coeff().matmul(&k)?)?;
                let m = factor_through_equaliser(&e, &h)?;
                commute = commute.max(e.compose(&m)?.coeff().max_abs_diff(h.coeff()));
                unique = unique.max(m.coeff().max_abs_diff(&k) + if freedom > 0 { 1.0 } else { 0.0 });
                last = Some(m);
            }
        }
        (ConstructionKind::Coequaliser, Pieces::Parallel(f, g)) => {
            let (q_space, q) = coequaliser(f, g)?;
            let freedom = null_space(&q.coeff().transpose(), RANK_TOL).cols();
            for t in 0..trials {
                let w = test_object(1 + t % 3);
                let k = gaussian_mat(&mut rng, w.dim(), q_space.dim());
                let h = OSMap::new(f.cod().clone(), w.clone(), k.matmul(q.coeff())?)?;
                let m = factor_through_coequaliser(&q, &h)?;
                commute = commute.max(m.compose(&q)?.coeff().max_abs_diff(h.coeff()));
                unique = unique.max(m.coeff().max_abs_diff(&k) + if freedom > 0 { 1.0 } else { 0.0 });
                last = Some(m);
            }
        }
        _ => return invalid("pieces do not match the construction kind"),
    }
    Ok(ConeReport {
        kind,
        residual_commute: commute,
        residual_unique: unique,
        trials,
        seed,
        mediator: last,
    })
}

/// Monomorphisms are the injective maps.
pub fn is_monomorphism(m: &OSMap) -> bool {
    m.is_injective()
}

/// Epimorphisms are the maps with dense, hence full, image.
pub fn is_epimorphism(e: &OSMap) -> bool {
    e.is_surjective()
}

/// Looks for distinct `g, h: W -> dom` with `m g = m h`.
pub fn left_cancellation_probe(m: &OSMap, trials: usize, seed: u64) -> Option<(OSMap, OSMap)> {
    let ker = null_space(m.coeff(), RANK_TOL);
    let mut rng = derive(seed, 0x3030);
    for t in 0..trials {
        let w = test_object(1 + t % 2);
        let g = gaussian_mat(&mut rng, m.dom().dim(), w.dim());
        let delta = ker.matmul(&gaussian_mat(&mut rng, ker.cols(), w.dim())).expect("sized");
        let h = &g + &delta;
        let equal_after = (m.coeff() * &g).max_abs_diff(&(m.coeff() * &h)) <= 1e-10 * (1.0 + g.max_abs());
        if equal_after && delta.max_abs() > 1e-8 {
            return Some((
                OSMap::new(w.clone(), m.dom().clone(), g).expect("sized"),
                OSMap::new(w, m.dom().clone(), h).expect("sized"),
            ));
        }
    }
    None
}

/// Looks for distinct `g, h: cod -> W` with `g e = h e`.
pub fn right_cancellation_probe(e: &OSMap, trials: usize, seed: u64) -> Option<(OSMap, OSMap)> {
    let coker = null_space(&e.coeff().transpose(), RANK_TOL);
    let mut rng = derive(seed, 0x3031);
    for t in 0..trials {
        let w = test_object(1 + t % 2);
        let g = gaussian_mat(&mut rng, w.dim(), e.cod().dim());
        let delta = gaussian_mat(&mut rng, w.dim(), coker.cols()).matmul(&coker.transpose()).expect("sized");
        let h = &g + &delta;
        let equal_after = (&g * e.coeff()).max_abs_diff(&(&h * e.coeff())) <= 1e-10 * (1.0 + g.max_abs());
        if equal_after && delta.max_abs() > 1e-8 {
            return Some((
                OSMap::new(e.cod().clone(), w.clone(), g).expect("sized"),
                OSMap::new(e.cod().clone(), w, h).expect("sized"),
            ));
        }
    }
    None
}

/// Regular-mono test: `m` factors through the equaliser of the cokernel
/// pair `(q, 0)`, and the factor must be a complete isometry onto that
/// subspace.
pub fn regular_mono_verdict(m: &OSMap, level: usize, trials: usize, tol: f64, seed: u64) -> Result<Verdict> {
    if !m.is_injective() {
        return is_complete_isometry(m, level, trials, tol, seed);
    }
    let img = range_basis(m.coeff(), RANK_TOL);
    let (_, q) = quotient(m.cod(), &img)?;
    let zero = OSMap::zero(m.cod(), q.cod());
    let (_, e) = equaliser(&q, &zero)?;
    let k = factor_through_equaliser(&e, m)?;
    is_complete_isometry(&k, level, trials, tol, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::LevelElement;
    use crate::maps::is_complete_quotient;
    use crate::space::coords;

    #[test]
    fn product_of_scalars_is_sup() {
        let c = OSpace::scalars();
        let p = product(&[c.clone(), c]);
        let v = p.space.level_norm(&coords(&[3.0, -4.0])).unwrap();
        assert_eq!(v.hi, 4.0);
        assert!(is_complete_quotient(&p.projections[0], 2, 3, 1e-6, 0).unwrap().holds());
        assert!(is_complete_isometry(&p.inclusions[1], 2, 3, 1e-6, 0).unwrap().holds());
    }

    #[test]
    fn coproduct_of_scalars_is_sum() {
        let c = OSpace::scalars();
        let p = coproduct(&[c.clone(), c], Search::default()).unwrap();
        let v = p.space.level_norm(&coords(&[3.0, -4.0])).unwrap();
        assert_eq!(v, crate::Interval::exact(7.0));
    }

    #[test]
    fn empty_product_is_zero() {
        assert_eq!(product(&[]).space.dim(), 0);
    }

    #[test]
    fn equaliser_edge_cases() {
        let m = OSpace::matrix_algebra(2);
        let id = OSMap::identity(&m);
        let (e, _) = equaliser(&id, &id).unwrap();
        assert_eq!(e.dim(), 4);
        let (z, _) = equaliser(&id, &OSMap::zero(&m, &m)).unwrap();
        assert_eq!(z.dim(), 0);
    }

    #[test]
    fn coequaliser_edge_cases() {
        let m = OSpace::matrix_algebra(2);
        let id = OSMap::identity(&m);
        let (c, _) = coequaliser(&id, &id).unwrap();
        assert_eq!(c.dim(), 4);
        let (z, _) = coequaliser(&id, &OSMap::zero(&m, &m)).unwrap();
        assert_eq!(z.dim(), 0);
    }

    #[test]
    fn universal_properties_hold() {
        let parts = vec![OSpace::matrix_algebra(2), OSpace::diagonal(2)];
        for kind in [ConstructionKind::Product, ConstructionKind::Coproduct] {
            let r = verify_universal(kind, &Pieces::Family(parts.clone()), 10, 1).unwrap();
            assert!(r.residual_commute <= 1e-12 && r.residual_unique <= 1e-9, "{r:?}");
        }
        let m = OSpace::matrix_algebra(2);
        let f = OSMap::identity(&m);
        let g = OSMap::new(m.clone(), m.clone(), CMat::diag(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)])).unwrap();
        for kind in [ConstructionKind::Equaliser, ConstructionKind::Coequaliser] {
            let r = verify_universal(kind, &Pieces::Parallel(f.clone(), g.clone()), 10, 1).unwrap();
            assert!(r.residual_commute <= 1e-12 && r.residual_unique <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn equaliser_of_identities_mediates_by_identity() {
        let m = OSpace::diagonal(2);
        let id = OSMap::identity(&m);
        let (_, e) = equaliser(&id, &id).unwrap();
        let k = factor_through_equaliser(&e, &id).unwrap();
        assert!(e.compose(&k).unwrap().coeff().max_abs_diff(&CMat::identity(2)) < 1e-12);
    }

    #[test]
    fn quotient_of_diagonal_by_first_unit() {
        let d = OSpace::diagonal(2);
        let (q, map) = quotient(&d, &CMat::from_real(&[&[1.0], &[0.0]])).unwrap();
        let cls = map.apply(&coords(&[0.0, 1.0])).unwrap();
        let v = q.level_norm(&cls).unwrap();
        assert!(v.contains(1.0, 1e-8), "{v:?}");
        assert!(is_complete_quotient(&map, 2, 3, 1e-6, 0).unwrap().holds());
    }

    #[test]
    fn nested_quotient_map_matches_coordinates() {
        let m = OSpace::matrix_algebra(2);
        let (q1, m1) = quotient(&m, &CMat::from_real(&[&[1.0], &[0.0], &[0.0], &[0.0]])).unwrap();
        let (_, m2) = quotient(&q1, &CMat::from_real(&[&[1.0], &[0.0], &[0.0]])).unwrap();
        let both = m2.compose(&m1).unwrap();
        assert_eq!(both.rank(), 2);
        let x = coords(&[1.0, 0.0, 0.0, 0.0]);
        assert!(both.apply(&x).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn mono_and_epi_probes() {
        let m = OSpace::matrix_algebra(2);
        let proj = product(&[m.clone(), m.clone()]).projections[0].clone();
        assert!(is_epimorphism(&proj) && !is_monomorphism(&proj));
        assert!(left_cancellation_probe(&proj, 5, 0).is_some());
        assert!(right_cancellation_probe(&proj, 5, 0).is_none());
        let inc = product(&[m.clone(), m]).inclusions[0].clone();
        assert!(left_cancellation_probe(&inc, 5, 0).is_none());
        assert!(right_cancellation_probe(&inc, 5, 0).is_some());
    }

    #[test]
    fn regular_mono_agrees_with_complete_isometry() {
        let m = OSpace::matrix_algebra(2);
        let inc = product(&[m.clone(), OSpace::diagonal(2)]).inclusions[0].clone();
        assert!(regular_mono_verdict(&inc, 2, 3, 1e-6, 0).unwrap().holds());
        let half = OSMap::identity(&m).scaled(C64::new(0.5, 0.0));
        assert!(regular_mono_verdict(&half, 2, 3, 1e-6, 0).unwrap().fails());
    }

    #[test]
    fn min_agrees_at_level_one() {
        let m = OSpace::matrix_algebra(2);
        let mn = min_quantization(&m, Search::default());
        let x = coords(&[1.0, 2.0, 0.5, -1.0]);
        assert!(mn.level_norm(&x).unwrap().overlaps(&m.level_norm(&x).unwrap(), 1e-9));
        let grid = LevelElement::from_fn(2, 4, |i, j, s| if s == i * 2 + j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let a = mn.level_norm(&grid).unwrap();
        assert!(a.hi <= m.level_norm(&grid).unwrap().hi + 1e-9);
    }
}
