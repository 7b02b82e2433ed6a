//! Trace-class spaces `T_n`, maps out of them, and the search for test maps
//! that detect monomorphisms which are not complete isometries.

use serde::{Deserialize, Serialize};

use crate::config::{Budget, Search};
use crate::element::LevelElement;
use crate::error::{invalid, Result};
use crate::maps::OSMap;
use crate::matrix::{CMat, C64, ZERO};
use crate::rng::{derive, gaussian_vec};
use crate::space::OSpace;

pub fn make_tn(n: usize) -> Result<OSpace> {
    OSpace::trace_class(n, Search::default())
}

/// The grid in `M_n(T_n)` corresponding to `id_{M_n}`: entry `(i, j)` is
/// the matrix unit `e_ij`.
pub fn identity_grid(n: usize) -> LevelElement {
    LevelElement::from_fn(n, n * n, |i, j, s| if s == i * n + j { C64::new(1.0, 0.0) } else { ZERO })
}

/// The map `T_n -> X`, `e_ij -> x_ij`, for `x` in the unit ball of `M_n(X)`.
pub fn lemma_contraction(x_space: &OSpace, x: &LevelElement) -> Result<OSMap> {
    x_space.check_element(x)?;
    let hi = x_space.level_norm(x)?.hi;
    if hi > 1.0 + 1e-12 {
        return invalid(format!("grid has norm up to {hi}, expected at most 1"));
    }
    map_from_grid(x_space, x)
}

fn map_from_grid(x_space: &OSpace, x: &LevelElement) -> Result<OSMap> {
    let n = x.level();
    let coeff = CMat::from_fn(x_space.dim(), n * n, |s, ij| x.entry(ij / n, ij % n)[s]);
    OSMap::new(make_tn(n)?, x_space.clone(), coeff)
}

/// A level-`n` element `y` of the codomain with `||y|| <= 1` whose preimage
/// has norm `fiber_min_norm > 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorWitness {
    pub n: usize,
    pub y_coords: LevelElement,
    pub fiber_min_norm: f64,
    /// `T_n -> cod`, `e_ij -> y_ij`; it has no contractive factorization
    /// through the monomorphism.
    #[serde(skip)]
    pub map: Option<OSMap>,
}

/// Searches levels `1..=cap` for a witness that the injective map `m` is not
/// a complete isometry onto its image.
pub fn generator_witness(m: &OSMap, cap: usize, samples: usize, tol: f64, seed: u64) -> Result<Option<GeneratorWitness>> {
    if !m.is_injective() {
        return invalid("map is not injective");
    }
    if cap == 0 {
        return invalid("level cap must be at least 1");
    }
    let d = m.dom().dim();
    if d == 0 {
        return Ok(None);
    }
    let budget = Budget::oracle();
    let mut rng = derive(seed, 0x6E4);
    let one = C64::new(1.0, 0.0);
    // ratio ||x|| / ||m_n(x)|| with a certified lower bound
    let ratio = |x: &LevelElement| -> (f64, f64, f64) {
        let y = x.map_coords(m.coeff()).expect("sized");
        let ny = m.cod().norm(&y).hi;
        let nx = m.dom().norm(x).lo;
        if ny <= 0.0 {
            return (0.0, nx, ny);
        }
        (nx / ny, nx, ny)
    };
    for n in 1..=cap {
        let mut best: Option<(LevelElement, f64)> = None;
        for k in 0..samples + 2 {
            let mut x = match k {
                0 => LevelElement::from_fn(n, d, |i, j, s| if (i * n + j) % d == s { one } else { ZERO }),
                1 => LevelElement::from_fn(n, d, |i, j, s| if (j * n + i) % d == s { one } else { ZERO }),
                _ => LevelElement::new(n, d, gaussian_vec(&mut rng, n * n * d)).expect("sized"),
            };
            if x.is_zero() {
                continue;
            }
            let mut f = ratio(&x).0;
            let mut step = 0.2;
            for _ in 0..budget.iterations {
                let scale = x.frobenius() / ((n * n * d) as f64).sqrt();
                let data = x
                    .data()
                    .iter()
                    .zip(gaussian_vec(&mut rng, n * n * d))
                    .map(|(a, b)| a + b * (step * scale))
                    .collect();
                let cand = LevelElement::new(n, d, data).expect("sized");
                let fc = ratio(&cand).0;
                if fc > f {
                    (x, f) = (cand, fc);
                    step *= 1.5;
                } else {
                    step *= 0.8;
                }
                if step < 1e-5 {
                    break;
                }
            }
            if best.as_ref().is_none_or(|b| f > b.1) {
                best = Some((x, f));
            }
        }
        if let Some((x, f)) = best {
            if f > 1.0 + tol {
                let (_, nx, ny) = ratio(&x);
                let y = x.map_coords(m.coeff())?.scale_re(1.0 / ny);
                let map = map_from_grid(m.cod(), &y)?;
                return Ok(Some(GeneratorWitness {
                    n,
                    y_coords: y,
                    fiber_min_norm: nx / ny,
                    map: Some(map),
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Interval;
    use crate::maps::{is_complete_contraction, is_complete_isometry};

    #[test]
    fn t1_is_the_scalars() {
        let t1 = make_tn(1).unwrap();
        let c = OSpace::scalars();
        let a = OSMap::new(t1.clone(), c.clone(), CMat::identity(1)).unwrap();
        let b = OSMap::new(c, t1, CMat::identity(1)).unwrap();
        assert!(is_complete_isometry(&a, 3, 4, 1e-6, 0).unwrap().holds());
        assert!(is_complete_isometry(&b, 3, 4, 1e-6, 0).unwrap().holds());
    }

    #[test]
    fn lemma_recovers_the_grid() {
        let m = OSpace::matrix_algebra(2);
        // The swap [e_ji] is unitary, so it has norm 1 in M_2(M_2).
        let x = LevelElement::from_fn(2, 4, |i, j, s| if s == j * 2 + i { C64::new(1.0, 0.0) } else { ZERO });
        let u = lemma_contraction(&m, &x).unwrap();
        let back = u.apply(&identity_grid(2)).unwrap();
        assert_eq!(back.max_abs_diff(&x), 0.0);
        assert!(is_complete_contraction(&u, 2, 1e-6, &Budget::light(), 0).unwrap().holds());
    }

    #[test]
    fn lemma_rejects_large_grids() {
        let c = OSpace::scalars();
        let x = LevelElement::vector(&[C64::new(2.0, 0.0)]);
        assert!(lemma_contraction(&c, &x).is_err());
        let z = LevelElement::zeros(2, 1);
        let u = lemma_contraction(&c, &z).unwrap();
        assert!(u.is_zero());
        let v = crate::maps::cb_norm(&u, &Budget::light(), 0, None).unwrap();
        assert_eq!(v, Interval::ZERO);
    }

    #[test]
    fn witnesses_for_non_isometries() {
        let m = OSpace::matrix_algebra(2);
        let half = OSMap::identity(&m).scaled(C64::new(0.5, 0.0));
        let w = generator_witness(&half, 3, 4, 1e-6, 0).unwrap().unwrap();
        assert_eq!(w.n, 1);
        assert!(w.fiber_min_norm > 1.9);
        assert!(generator_witness(&OSMap::identity(&m), 2, 4, 1e-6, 0).unwrap().is_none());
        let weak = m.min_quantization(Search::default());
        let id = OSMap::new(m.clone(), weak, CMat::identity(4)).unwrap();
        let w = generator_witness(&id, 2, 4, 1e-6, 0).unwrap().unwrap();
        assert_eq!(w.n, 2);
        let json = serde_json::to_value(&w).unwrap();
        assert!(json.get("y_coords").is_some() && json.get("fiber_min_norm").is_some());
    }
}
