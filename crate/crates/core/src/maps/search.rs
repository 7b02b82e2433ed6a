//! Lower bounds for `||u_n||` by maximising `||u_n(x)|| / ||x||`.
//!
//! When both sides have matrix models the ratio is smooth almost
//! everywhere and is maximised with L-BFGS on a log-sum-exp smoothing,
//! restarted from structured and random grids. Otherwise a (1+1)
//! evolution strategy works directly on the certified norm intervals.

use rand::Rng;

use super::OSMap;
use crate::affine::lbfgs;
use crate::config::Budget;
use crate::element::LevelElement;
use crate::matrix::{CMat, C64, ZERO};
use crate::rng::{derive, gaussian_vec};
use crate::space::Realization;
use crate::svd::svd;

pub struct Found {
    pub ratio: f64,
    pub witness: Option<LevelElement>,
}

/// Searches for a large ratio at level `n`. Stops early once `ceiling`
/// (a known upper bound) is reached.
pub(crate) fn lower_search(u: &OSMap, n: usize, budget: &Budget, seed: u64, ceiling: f64) -> Found {
    let d = u.dom().dim();
    if d == 0 || u.is_zero() {
        return Found {
            ratio: 0.0,
            witness: None,
        };
    }
    let mut rng = derive(seed, 0x0B5E_0000 + n as u64);
    let rd = u.dom().concrete_form();
    let rc = u.cod().concrete_form();
    let surrogate = u.cod().cc_form();
    match (rd, rc, surrogate) {
        (Some(rd), Some(rc), _) => smooth_search(u, n, budget, &mut rng, ceiling, &rd, &rc, true),
        (Some(rd), None, Some(cc)) => {
            // The contractive model of the codomain under-estimates its norm,
            // so the surrogate ratio is itself a valid lower bound.
            let mut f = smooth_search(u, n, budget, &mut rng, ceiling, &rd, &cc, false);
            if let Some(w) = &f.witness {
                let den = u.dom().norm(w).hi;
                let num = u.cod().norm(&w.map_coords(u.coeff()).expect("sized")).lo;
                if den > 0.0 {
                    f.ratio = f.ratio.max(num / den);
                }
            }
            f
        }
        _ => evolution_search(u, n, budget, &mut rng, ceiling),
    }
}

fn structured_start(n: usize, d: usize, restart: usize) -> Option<LevelElement> {
    let one = C64::new(1.0, 0.0);
    match restart {
        0 => Some(LevelElement::from_fn(n, d, |i, j, s| {
            if (i * n + j) % d == s {
                one
            } else {
                ZERO
            }
        })),
        1 => Some(LevelElement::from_fn(n, d, |i, j, s| {
            if (j * n + i) % d == s {
                one
            } else {
                ZERO
            }
        })),
        _ => None,
    }
}

fn random_start<R: Rng>(rng: &mut R, n: usize, d: usize) -> LevelElement {
    LevelElement::new(n, d, gaussian_vec(rng, n * n * d)).expect("sized")
}

fn to_real(x: &LevelElement) -> Vec<f64> {
    x.data().iter().flat_map(|z| [z.re, z.im]).collect()
}

fn from_real(z: &[f64], n: usize, d: usize) -> LevelElement {
    let data = z.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
    LevelElement::new(n, d, data).expect("sized")
}

/// Smoothed top singular value and its gradient matrix.
fn smooth_top(a: &CMat, mu: f64) -> (f64, f64, CMat) {
    let dcmp = svd(a);
    let smax = dcmp.s[0];
    let e: Vec<f64> = dcmp.s.iter().map(|s| ((s - smax) / mu).exp()).collect();
    let tot: f64 = e.iter().sum();
    let (r, c) = a.shape();
    let mut g = CMat::zeros(r, c);
    for (t, et) in e.iter().enumerate() {
        let w = et / tot;
        if w < 1e-16 {
            continue;
        }
        for i in 0..r {
            let ui = dcmp.u[(i, t)] * w;
            for j in 0..c {
                g[(i, j)] += ui * dcmp.v[(j, t)].conj();
            }
        }
    }
    (smax + mu * tot.ln(), smax, g)
}

#[allow(clippy::too_many_arguments)]
fn smooth_search<R: Rng>(
    u: &OSMap,
    n: usize,
    budget: &Budget,
    rng: &mut R,
    ceiling: f64,
    rd: &Realization,
    rc: &Realization,
    exact: bool,
) -> Found {
    let d = u.dom().dim();
    let coeff = u.coeff();
    let coeff_t = coeff.transpose();
    let mut best = 0.0f64;
    let mut witness: Option<LevelElement> = None;
    let per_stage = (budget.iterations / 3).max(5);
    for restart in 0..budget.restarts.max(1) {
        let start = structured_start(n, d, restart).unwrap_or_else(|| random_start(rng, n, d));
        let mut z = to_real(&start);
        for rel in [1e-1, 1e-2, 1e-4] {
            // Normalise so the domain norm is one; the ratio is unchanged.
            let x = from_real(&z, n, d);
            let den = svd(&rd.realize(&x)).s[0];
            if den <= 0.0 || !den.is_finite() {
                break;
            }
            for v in z.iter_mut() {
                *v /= den;
            }
            let mu = rel;
            let mut fg = |zz: &[f64]| {
                let x = from_real(zz, n, d);
                let y = x.map_coords(coeff).expect("sized");
                let (sd, rawd, gd) = smooth_top(&rd.realize(&x), mu);
                let (sn, rawn, gn) = smooth_top(&rc.realize(&y), mu);
                if rawd > 0.0 {
                    let ratio = rawn / rawd;
                    if ratio > best {
                        best = ratio;
                        witness = Some(x.clone());
                    }
                }
                let cd = rd.pullback(&gd, n);
                let cn = rc.pullback(&gn, n).map_coords(&coeff_t).expect("sized");
                let mut grad = Vec::with_capacity(zz.len());
                for (a, b) in cd.data().iter().zip(cn.data()) {
                    let g = a / sd - b / sn;
                    grad.push(g.re);
                    grad.push(-g.im);
                }
                (sd.ln() - sn.max(1e-300).ln(), grad)
            };
            z = lbfgs(&mut fg, z, per_stage, 1e-12);
            if best >= ceiling * (1.0 - 1e-12) {
                break;
            }
        }
        if best >= ceiling * (1.0 - 1e-12) {
            break;
        }
    }
    if exact {
        // Re-evaluate the witness with the space's own norms.
        if let Some(w) = &witness {
            let den = u.dom().norm(w).hi;
            let num = u.cod().norm(&w.map_coords(coeff).expect("sized")).lo;
            if den > 0.0 {
                best = num / den;
            }
        }
    }
    Found {
        ratio: best,
        witness,
    }
}

fn evolution_search<R: Rng>(u: &OSMap, n: usize, budget: &Budget, rng: &mut R, ceiling: f64) -> Found {
    let d = u.dom().dim();
    let coeff = u.coeff();
    let ratio = |x: &LevelElement| -> f64 {
        let den = u.dom().norm_hi(x);
        if den <= 0.0 {
            return 0.0;
        }
        u.cod().norm(&x.map_coords(coeff).expect("sized")).lo / den
    };
    let mut best = 0.0f64;
    let mut witness = None;
    for restart in 0..budget.restarts.max(1) {
        let mut x = structured_start(n, d, restart).unwrap_or_else(|| random_start(rng, n, d));
        let mut fx = ratio(&x);
        let mut step = 0.3;
        for _ in 0..budget.iterations {
            let scale = x.frobenius().max(1e-300) / ((n * n * d) as f64).sqrt();
            let noise = gaussian_vec(rng, n * n * d);
            let data: Vec<C64> = x
                .data()
                .iter()
                .zip(&noise)
                .map(|(a, b)| a + b * (step * scale))
                .collect();
            let cand = LevelElement::new(n, d, data).expect("sized");
            let fc = ratio(&cand);
            if fc > fx {
                x = cand;
                fx = fc;
                step *= 1.5;
            } else {
                step *= 0.9;
            }
            if step < 1e-6 || fx >= ceiling * (1.0 - 1e-12) {
                break;
            }
        }
        if fx > best {
            best = fx;
            witness = Some(x);
        }
        if best >= ceiling * (1.0 - 1e-12) {
            break;
        }
    }
    Found {
        ratio: best,
        witness,
    }
}
