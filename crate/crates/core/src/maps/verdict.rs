//! Three-valued checks for complete contractions, isometries and quotient maps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::search::lower_search;
use super::OSMap;
use crate::config::Budget;
use crate::element::LevelElement;
use crate::error::{invalid, Result};
use crate::interval::Interval;
use crate::matrix::{CMat, C64, ZERO};
use crate::rng::{derive, gaussian_vec};
use crate::space::{quotient_affine, OSpace, Realization, Structure};
use crate::svd::{null_space, pinv};

/// A replayable counterexample: the element, its level and the ratio seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(flatten)]
    pub element: LevelElement,
    pub achieved_ratio: f64,
}

impl Witness {
    pub fn level(&self) -> usize {
        self.element.level()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails {
        reason: String,
        witness: Option<Witness>,
    },
    Undecided {
        reason: String,
    },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }

    pub fn undecided(&self) -> bool {
        matches!(self, Verdict::Undecided { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Fails { witness, .. } => witness.as_ref(),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails { .. } => "fails",
            Verdict::Undecided { .. } => "undecided",
        }
    }

    /// Keeps the worst of two verdicts: fails over undecided over holds.
    pub fn and(self, other: Verdict) -> Verdict {
        match (&self, &other) {
            (Verdict::Fails { .. }, _) => self,
            (_, Verdict::Fails { .. }) => other,
            (Verdict::Undecided { .. }, _) => self,
            _ => other,
        }
    }
}

fn check_args(level: usize, tol: f64) -> Result<()> {
    if level == 0 {
        return invalid("level must be at least 1");
    }
    if !(tol >= 0.0) {
        return invalid("tolerance must be nonnegative");
    }
    Ok(())
}

/// Checks `||u_n|| <= 1` for `n = 1..=level`.
pub fn is_complete_contraction(
    u: &OSMap,
    level: usize,
    tol: f64,
    budget: &Budget,
    seed: u64,
) -> Result<Verdict> {
    check_args(level, tol)?;
    let hi = u.cb_upper();
    if hi <= 1.0 + tol {
        return Ok(Verdict::Holds);
    }
    let mut best = 0.0f64;
    for n in 1..=level {
        let found = lower_search(u, n, budget, seed.wrapping_add(n as u64), 1.0 + 2.0 * tol);
        if found.ratio > 1.0 + tol {
            return Ok(Verdict::Fails {
                reason: format!("level {n} ratio {:.9} exceeds 1", found.ratio),
                witness: found.witness.map(|element| Witness {
                    element,
                    achieved_ratio: found.ratio,
                }),
            });
        }
        best = best.max(found.ratio);
    }
    Ok(Verdict::Undecided {
        reason: format!("best ratio found {best:.9}, upper bound {hi:.9}"),
    })
}

fn probe<R: Rng>(rng: &mut R, n: usize, d: usize, k: usize) -> LevelElement {
    let one = C64::new(1.0, 0.0);
    match k {
        0 => LevelElement::from_fn(n, d, |i, j, s| if (i * n + j) % d == s { one } else { ZERO }),
        1 => LevelElement::from_fn(n, d, |i, j, s| if (j * n + i) % d == s { one } else { ZERO }),
        _ => LevelElement::new(n, d, gaussian_vec(rng, n * n * d)).expect("sized"),
    }
}

/// Compares `||u_n(x)||` with `||x||` on structured and random probes.
pub fn is_complete_isometry(u: &OSMap, level: usize, trials: usize, tol: f64, seed: u64) -> Result<Verdict> {
    check_args(level, tol)?;
    let d = u.dom().dim();
    if d == 0 {
        return Ok(Verdict::Holds);
    }
    if !u.is_injective() {
        let ker = null_space(u.coeff(), 1e-10);
        return Ok(Verdict::Fails {
            reason: "map is not injective".into(),
            witness: Some(Witness {
                element: LevelElement::vector(&ker.col(0)),
                achieved_ratio: 0.0,
            }),
        });
    }
    let mut rng = derive(seed, 0x150);
    for n in 1..=level {
        for k in 0..trials + 2 {
            let x = probe(&mut rng, n, d, k);
            if x.is_zero() {
                continue;
            }
            let nx = u.dom().norm(&x);
            let ny = u.cod().norm(&x.map_coords(u.coeff())?);
            let slack = tol * nx.hi.max(ny.hi);
            if !nx.overlaps(&ny, slack) {
                return Ok(Verdict::Fails {
                    reason: format!(
                        "level {n}: norm in [{:.9}, {:.9}] maps to norm in [{:.9}, {:.9}]",
                        nx.lo, nx.hi, ny.lo, ny.hi
                    ),
                    witness: Some(Witness {
                        element: x,
                        achieved_ratio: ny.mid() / nx.mid(),
                    }),
                });
            }
        }
    }
    Ok(Verdict::Holds)
}

/// How a domain element's norm is computed from a matrix model:
/// pull back by `lift`, then minimise over `extra` in the model's coordinates.
struct Model {
    form: Realization,
    lift: CMat,
    extra: CMat,
}

fn model(x: &OSpace) -> Option<Model> {
    if let Some(form) = x.concrete_form() {
        let d = x.dim();
        return Some(Model {
            form,
            lift: CMat::identity(d),
            extra: CMat::zeros(d, 0),
        });
    }
    if let Structure::Quotient {
        parent,
        kernel,
        complement,
    } = x.structure()
    {
        return Some(Model {
            form: parent.concrete_form()?,
            lift: complement.clone(),
            extra: kernel.clone(),
        });
    }
    None
}

/// Interval for `inf { ||x|| : u_n(x) = y }`.
fn fiber_norm<R: Rng>(u: &OSMap, y: &LevelElement, kernel: &CMat, rng: &mut R, budget: &Budget) -> Interval {
    let x0 = y.map_coords(&pinv(u.coeff(), 1e-10)).expect("sized");
    if let Some(m) = model(u.dom()) {
        let lifted = x0.map_coords(&m.lift).expect("sized");
        let all = CMat::hstack(&[m.extra.clone(), m.lift.matmul(kernel).expect("sized")]).expect("rows");
        if all.cols() == 0 {
            return u.dom().norm(&x0);
        }
        return quotient_affine(&m.form, &all, &lifted).interval;
    }
    // No matrix model: a random descent over the fiber gives an upper bound,
    // and `||y|| <= ||u_n|| ||x||` gives a lower one.
    let n = y.level();
    let r = kernel.cols();
    let mut best = u.dom().norm_hi(&x0);
    if r > 0 {
        let mut c = vec![ZERO; n * n * r];
        let mut step = 0.3 * best.max(1e-12);
        for _ in 0..budget.iterations {
            let trial: Vec<C64> = c
                .iter()
                .zip(gaussian_vec(rng, n * n * r))
                .map(|(a, b)| a + b * step)
                .collect();
            let shift = LevelElement::new(n, r, trial.clone()).expect("sized");
            let x = x0.add(&shift.map_coords(kernel).expect("sized")).expect("sized");
            let v = u.dom().norm_hi(&x);
            if v < best {
                best = v;
                c = trial;
                step *= 1.5;
            } else {
                step *= 0.85;
            }
            if step < 1e-9 {
                break;
            }
        }
    }
    let lo = u.cod().norm(y).lo / u.cb_upper().max(1e-300);
    Interval::approximate(lo.min(best), best)
}

/// Checks that every sampled `y` in the unit ball of `M_n(cod)` has a
/// preimage of norm at most `1 + tol`. A failure witness is the offending
/// `y`; its ratio is `||y|| / inf ||x||` (zero when `y` is unreachable).
pub fn is_complete_quotient(
    u: &OSMap,
    level: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<Verdict> {
    check_args(level, tol)?;
    let dc = u.cod().dim();
    if dc == 0 {
        return Ok(Verdict::Holds);
    }
    if !u.is_surjective() {
        let left = null_space(&u.coeff().adjoint(), 1e-10);
        return Ok(Verdict::Fails {
            reason: format!("map has rank {} < {dc}", u.rank()),
            witness: Some(Witness {
                element: LevelElement::vector(&left.col(0)),
                achieved_ratio: 0.0,
            }),
        });
    }
    let kernel = null_space(u.coeff(), 1e-10);
    let budget = Budget::oracle();
    let mut rng = derive(seed, 0x0B07);
    let mut loose: Option<String> = None;
    for n in 1..=level {
        for k in 0..samples + 2 {
            let y = probe(&mut rng, n, dc, k);
            let ny = u.cod().norm(&y);
            if ny.hi <= 0.0 {
                continue;
            }
            let y = y.scale_re(1.0 / ny.hi);
            let ny = ny.scale(1.0 / ny.hi);
            let fiber = fiber_norm(u, &y, &kernel, &mut rng, &budget);
            if fiber.lo > (1.0 + tol) * ny.hi {
                return Ok(Verdict::Fails {
                    reason: format!(
                        "level {n}: element of norm at most {:.9} has no preimage of norm below {:.9}",
                        ny.hi, fiber.lo
                    ),
                    witness: Some(Witness {
                        element: y,
                        achieved_ratio: ny.mid() / fiber.mid(),
                    }),
                });
            }
            if fiber.hi > (1.0 + tol) * ny.lo && loose.is_none() {
                loose = Some(format!(
                    "level {n}: minimal preimage norm in [{:.9}, {:.9}] for an element of norm in [{:.9}, {:.9}]",
                    fiber.lo, fiber.hi, ny.lo, ny.hi
                ));
            }
        }
    }
    Ok(match loose {
        None => Verdict::Holds,
        Some(reason) => Verdict::Undecided { reason },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transpose(k: usize) -> OSMap {
        let m = OSpace::matrix_algebra(k);
        let coeff = CMat::from_fn(k * k, k * k, |a, b| {
            let (i, j) = (b / k, b % k);
            if a == j * k + i {
                C64::new(1.0, 0.0)
            } else {
                ZERO
            }
        });
        OSMap::new(m.clone(), m, coeff).unwrap()
    }

    #[test]
    fn identity_is_everything() {
        let u = OSMap::identity(&OSpace::matrix_algebra(2));
        assert!(is_complete_contraction(&u, 3, 1e-6, &Budget::light(), 0).unwrap().holds());
        assert!(is_complete_isometry(&u, 3, 5, 1e-6, 0).unwrap().holds());
        assert!(is_complete_quotient(&u, 3, 5, 1e-6, 0).unwrap().holds());
    }

    #[test]
    fn doubled_identity_fails_with_witness() {
        let u = OSMap::identity(&OSpace::matrix_algebra(2)).scaled(C64::new(2.0, 0.0));
        let v = is_complete_contraction(&u, 2, 1e-6, &Budget::light(), 0).unwrap();
        let w = v.witness().expect("witness");
        assert!(w.achieved_ratio > 1.9);
        let half = OSMap::identity(&OSpace::matrix_algebra(2)).scaled(C64::new(0.5, 0.0));
        assert!(is_complete_isometry(&half, 2, 3, 1e-6, 0).unwrap().fails());
    }

    #[test]
    fn transpose_is_not_completely_contractive() {
        let v = is_complete_contraction(&transpose(2), 2, 1e-6, &Budget::light(), 1).unwrap();
        let w = v.witness().expect("fails at level 2");
        assert_eq!(w.level(), 2);
        assert!(w.achieved_ratio > 1.0 + 1e-6);
        let u = transpose(2);
        let back = u.apply(&w.element).unwrap();
        let r = u.cod().level_norm(&back).unwrap().lo / u.dom().level_norm(&w.element).unwrap().hi;
        assert!((r - w.achieved_ratio).abs() < 1e-9);
    }

    #[test]
    fn subspace_inclusion_is_not_onto() {
        let m = OSpace::matrix_algebra(2);
        let d = OSpace::diagonal(2);
        let embed = CMat::from_fn(4, 2, |a, b| if a == 3 * b { C64::new(1.0, 0.0) } else { ZERO });
        let u = OSMap::new(d, m, embed).unwrap();
        assert!(is_complete_quotient(&u, 1, 2, 1e-6, 0).unwrap().fails());
        assert!(is_complete_isometry(&u, 3, 5, 1e-6, 0).unwrap().holds());
    }

    #[test]
    fn verdict_json_shape() {
        let v = Verdict::Fails {
            reason: "r".into(),
            witness: Some(Witness {
                element: LevelElement::vector(&[C64::new(1.0, 0.0)]),
                achieved_ratio: 2.0,
            }),
        };
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["verdict"], "fails");
        assert_eq!(j["witness"]["level"], 1);
        assert_eq!(j["witness"]["achieved_ratio"], 2.0);
        let back: Verdict = serde_json::from_value(j).unwrap();
        assert_eq!(back, v);
    }
}
