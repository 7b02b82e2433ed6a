//! The operator space projective tensor product.
//!
//! `||v|| = inf ||alpha|| ||x|| ||y|| ||beta||` over `v = alpha (x (x) y) beta`.
//! Upper bounds come from explicit factorizations built out of singular
//! value decompositions of reshaped coordinates; lower bounds from
//! completely contractive maps into matrix algebras.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Budget, Search};
use crate::element::LevelElement;
use crate::error::{invalid, shape, Result};
use crate::interval::Interval;
use crate::maps::OSMap;
use crate::matrix::{CMat, C64, ZERO};
use crate::rng::{derive, gaussian_mat, gaussian_vec};
use crate::space::{OSpace, Realization};
use crate::svd::{pinv, spectral_norm_unchecked, svd};

/// `x (x) y` for `x` in `M_p(X)`, `y` in `M_q(Y)`: the level-`pq` element
/// with entry `((i,k),(j,l))` equal to `x_ij (x) y_kl`.
pub fn elementary(x: &LevelElement, y: &LevelElement) -> LevelElement {
    let (p, q) = (x.level(), y.level());
    let (dx, dy) = (x.dim(), y.dim());
    let mut out = LevelElement::zeros(p * q, dx * dy);
    for i in 0..p {
        for j in 0..p {
            let xe = x.entry(i, j);
            for k in 0..q {
                for l in 0..q {
                    let ye = y.entry(k, l);
                    let dst = out.entry_mut(i * q + k, j * q + l);
                    for (s, a) in xe.iter().enumerate() {
                        for (t, b) in ye.iter().enumerate() {
                            dst[s * dy + t] = a * b;
                        }
                    }
                }
            }
        }
    }
    out
}

/// `v = sum_r x_r (x) y_r`, where the level-`n` index of `x_r (x) y_r` is
/// `i*q + k` (`y_outer == false`) or `k*p + i`.
#[derive(Clone)]
struct Decomposition {
    p: usize,
    q: usize,
    y_outer: bool,
    xs: Vec<LevelElement>,
    ys: Vec<LevelElement>,
}

impl Decomposition {
    fn index(&self, i: usize, k: usize) -> usize {
        if self.y_outer {
            k * self.p + i
        } else {
            i * self.q + k
        }
    }

    fn value(&self, left: &OSpace, right: &OSpace) -> f64 {
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(x, y)| left.norm_hi(x) * right.norm_hi(y))
            .sum()
    }

    /// Replaces `(x, y)` by `(x G, y G^{-T})`, which leaves the sum unchanged.
    fn mixed(&self, g: &CMat, g_inv_t: &CMat) -> Decomposition {
        let mix = |v: &[LevelElement], m: &CMat| -> Vec<LevelElement> {
            (0..m.cols())
                .map(|r| {
                    let (n, d) = (v[0].level(), v[0].dim());
                    let mut acc = LevelElement::zeros(n, d);
                    for (a, va) in v.iter().enumerate() {
                        let w = m[(a, r)];
                        if w != ZERO {
                            acc = acc.add(&va.scale(w)).expect("same shape");
                        }
                    }
                    acc
                })
                .collect()
        };
        Decomposition {
            p: self.p,
            q: self.q,
            y_outer: self.y_outer,
            xs: mix(&self.xs, g),
            ys: mix(&self.ys, g_inv_t),
        }
    }
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|p| n % p == 0).collect()
}

fn schmidt(v: &LevelElement, dx: usize, dy: usize, p: usize, q: usize, y_outer: bool) -> Decomposition {
    let mut d = Decomposition {
        p,
        q,
        y_outer,
        xs: vec![],
        ys: vec![],
    };
    let rows = p * p * dx;
    let cols = q * q * dy;
    let mut m = CMat::zeros(rows, cols);
    for i in 0..p {
        for j in 0..p {
            for k in 0..q {
                for l in 0..q {
                    let e = v.entry(d.index(i, k), d.index(j, l));
                    for s in 0..dx {
                        for t in 0..dy {
                            m[((i * p + j) * dx + s, (k * q + l) * dy + t)] = e[s * dy + t];
                        }
                    }
                }
            }
        }
    }
    let f = svd(&m);
    let top = f.s.first().copied().unwrap_or(0.0);
    for (r, &sigma) in f.s.iter().enumerate() {
        if sigma <= 1e-14 * top || sigma == 0.0 {
            break;
        }
        let x: Vec<C64> = (0..rows).map(|a| f.u[(a, r)] * sigma).collect();
        let y: Vec<C64> = (0..cols).map(|b| f.v[(b, r)].conj()).collect();
        d.xs.push(LevelElement::new(p, dx, x).expect("sized"));
        d.ys.push(LevelElement::new(q, dy, y).expect("sized"));
    }
    d
}

fn best_decomposition(left: &OSpace, right: &OSpace, v: &LevelElement, search: &Search) -> (Decomposition, f64) {
    let n = v.level();
    let (dx, dy) = (left.dim(), right.dim());
    let mut best: Option<(Decomposition, f64)> = None;
    for p in divisors(n) {
        let q = n / p;
        let orders: &[bool] = if p == 1 || q == 1 { &[false] } else { &[false, true] };
        for &y_outer in orders {
            let d = schmidt(v, dx, dy, p, q, y_outer);
            let val = d.value(left, right);
            if best.as_ref().is_none_or(|b| val < b.1) {
                best = Some((d, val));
            }
        }
    }
    let (d, val) = best.expect("n >= 1 has a divisor");
    refine(left, right, d, val, search)
}

/// Random invertible re-mixing of the terms, keeping improvements.
fn refine(left: &OSpace, right: &OSpace, d: Decomposition, val: f64, search: &Search) -> (Decomposition, f64) {
    let r = d.xs.len();
    if r < 2 {
        return (d, val);
    }
    let mut rng = derive(search.seed, 0x7E45);
    let (mut cur, mut best) = (d, val);
    let mut step = 0.2;
    for _ in 0..search.iterations {
        let g = &CMat::identity(r) + &gaussian_mat(&mut rng, r, r).scale_re(step);
        let g_inv_t = pinv(&g, 1e-12).transpose();
        let cand = cur.mixed(&g, &g_inv_t);
        let v = cand.value(left, right);
        if v < best {
            best = v;
            cur = cand;
            step = (step * 1.3).min(1.0);
        } else {
            step *= 0.85;
        }
        if step < 1e-4 {
            break;
        }
    }
    (cur, best)
}

/// Completely contractive maps into matrix algebras used for lower bounds:
/// the space's matrix model when it has one, otherwise normalised
/// coordinate functionals.
fn contractive_models(x: &OSpace) -> Vec<Realization> {
    let mut out = vec![];
    if let Some(f) = x.cc_form() {
        out.push(f.clone());
        if x.concrete_form().is_some() {
            return out;
        }
    }
    let d = x.dim();
    for (s, k) in x.coordinate_bounds().iter().enumerate() {
        if !(k.is_finite() && *k > 0.0) {
            continue;
        }
        let basis = (0..d)
            .map(|t| CMat::scalar(if t == s { C64::new(1.0 / k, 0.0) } else { ZERO }))
            .collect();
        out.push(Realization { ambient: 1, basis });
    }
    out
}

fn lower(left: &OSpace, right: &OSpace, v: &LevelElement) -> f64 {
    let mut lo = 0.0f64;
    for a in contractive_models(left) {
        for b in contractive_models(right) {
            let r = Realization::kron(&a, &b);
            lo = lo.max(spectral_norm_unchecked(&r.realize(v)));
        }
    }
    lo
}

pub(crate) fn tensor_norm(left: &OSpace, right: &OSpace, v: &LevelElement, search: &Search) -> Interval {
    if v.is_zero() {
        return Interval::ZERO;
    }
    let (_, hi) = best_decomposition(left, right, v, search);
    let lo = lower(left, right, v);
    Interval::new(lo, hi)
}

pub(crate) fn tensor_upper(left: &OSpace, right: &OSpace, v: &LevelElement, search: &Search) -> f64 {
    if v.is_zero() {
        return 0.0;
    }
    best_decomposition(left, right, v, search).1
}

/// An explicit `v = alpha (x (x) y) beta` certifying an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub p: usize,
    pub q: usize,
    pub alpha: CMat,
    pub x: LevelElement,
    pub y: LevelElement,
    pub beta: CMat,
    /// `||alpha|| ||x|| ||y|| ||beta||` with upper bounds for the middle norms.
    pub value: f64,
}

impl Factorization {
    /// `alpha (x (x) y) beta` in tensor coordinates.
    pub fn realize(&self) -> LevelElement {
        elementary(&self.x, &self.y).compress(&self.alpha, &self.beta).expect("sized")
    }
}

/// Best factorization found for `v`; `None` for `v = 0`.
pub fn factorize(x: &OSpace, y: &OSpace, v: &LevelElement, search: &Search) -> Result<Option<Factorization>> {
    if v.dim() != x.dim() * y.dim() {
        return shape("tensor element dimension does not match the factors");
    }
    if v.is_zero() {
        return Ok(None);
    }
    let (d, _) = best_decomposition(x, y, v, search);
    let n = v.level();
    let r = d.xs.len();
    let (p, q) = (d.p, d.q);
    let (dx, dy) = (x.dim(), y.dim());
    let mut xb = LevelElement::zeros(r * p, dx);
    let mut yb = LevelElement::zeros(r * q, dy);
    let mut weights = Vec::with_capacity(r);
    for (t, (xr, yr)) in d.xs.iter().zip(&d.ys).enumerate() {
        let (nx, ny) = (x.norm_hi(xr), y.norm_hi(yr));
        weights.push((nx * ny).sqrt());
        for i in 0..p {
            for j in 0..p {
                let src = xr.entry(i, j);
                let dst = xb.entry_mut(t * p + i, t * p + j);
                for s in 0..dx {
                    dst[s] = src[s] / nx;
                }
            }
        }
        for k in 0..q {
            for l in 0..q {
                let src = yr.entry(k, l);
                let dst = yb.entry_mut(t * q + k, t * q + l);
                for s in 0..dy {
                    dst[s] = src[s] / ny;
                }
            }
        }
    }
    // alpha = sum_r w_r P_r with P_r selecting the (r, r) block of x (x) y.
    let big = r * p * r * q;
    let mut alpha = CMat::zeros(n, big);
    for (t, w) in weights.iter().enumerate() {
        for i in 0..p {
            for k in 0..q {
                let col = (t * p + i) * (r * q) + t * q + k;
                alpha[(d.index(i, k), col)] = C64::new(*w, 0.0);
            }
        }
    }
    let beta = alpha.transpose();
    let value = spectral_norm_unchecked(&alpha)
        * spectral_norm_unchecked(&beta)
        * x.norm_hi(&xb)
        * y.norm_hi(&yb);
    Ok(Some(Factorization {
        p: r * p,
        q: r * q,
        alpha,
        x: xb,
        y: yb,
        beta,
        value,
    }))
}

/// A bilinear map `X x Y -> Z`: `coeff[c][(s, t)]` is coordinate `c` of
/// `u(b_s, c_t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BilinMap {
    pub dom_x: OSpace,
    pub dom_y: OSpace,
    pub cod: OSpace,
    pub coeff: Vec<CMat>,
}

impl BilinMap {
    pub fn new(dom_x: OSpace, dom_y: OSpace, cod: OSpace, coeff: Vec<CMat>) -> Result<BilinMap> {
        if coeff.len() != cod.dim() || coeff.iter().any(|c| c.shape() != (dom_x.dim(), dom_y.dim())) {
            return shape(format!(
                "bilinear coefficients must be {} matrices of size {}x{}",
                cod.dim(),
                dom_x.dim(),
                dom_y.dim()
            ));
        }
        Ok(BilinMap {
            dom_x,
            dom_y,
            cod,
            coeff,
        })
    }

    pub fn zero(dom_x: &OSpace, dom_y: &OSpace, cod: &OSpace) -> BilinMap {
        let coeff = vec![CMat::zeros(dom_x.dim(), dom_y.dim()); cod.dim()];
        BilinMap::new(dom_x.clone(), dom_y.clone(), cod.clone(), coeff).expect("sized")
    }

    /// `[u(x_ij, y_kl)]` indexed by `((i,k),(j,l))`.
    pub fn apply(&self, x: &LevelElement, y: &LevelElement) -> Result<LevelElement> {
        self.dom_x.check_element(x)?;
        self.dom_y.check_element(y)?;
        elementary(x, y).map_coords(&self.matrix())
    }

    fn matrix(&self) -> CMat {
        let dy = self.dom_y.dim();
        CMat::from_fn(self.cod.dim(), self.dom_x.dim() * dy, |c, st| self.coeff[c][(st / dy, st % dy)])
    }
}

/// The linear map on the projective tensor product agreeing with `u` on
/// elementary tensors.
pub fn linearize(u: &BilinMap, search: Search) -> OSMap {
    let dom = OSpace::tensor(&u.dom_x, &u.dom_y, search);
    OSMap::new(dom, u.cod.clone(), u.matrix()).expect("sized")
}

/// The bilinear map `(x, y) -> v(x (x) y)`.
pub fn delinearize(v: &OSMap, dom_x: &OSpace, dom_y: &OSpace) -> Result<BilinMap> {
    let dy = dom_y.dim();
    if v.dom().dim() != dom_x.dim() * dy {
        return shape("map domain is not the tensor product of the given spaces");
    }
    let coeff = (0..v.cod().dim())
        .map(|c| CMat::from_fn(dom_x.dim(), dy, |s, t| v.coeff()[(c, s * dy + t)]))
        .collect();
    BilinMap::new(dom_x.clone(), dom_y.clone(), v.cod().clone(), coeff)
}

/// Interval for the jointly completely bounded norm, with levels of the two
/// arguments searched up to `caps`.
pub fn jcb_norm(u: &BilinMap, caps: (usize, usize), budget: &Budget, seed: u64) -> Result<Interval> {
    if caps.0 == 0 || caps.1 == 0 {
        return invalid("level caps must be at least 1");
    }
    if u.coeff.iter().all(|c| c.max_abs() == 0.0) || u.dom_x.dim() == 0 || u.dom_y.dim() == 0 {
        return Ok(Interval::ZERO);
    }
    let hi = linearize(u, Search::default().with_seed(seed)).cb_upper();
    let mut rng = derive(seed, 0x0DCB);
    let (dx, dy) = (u.dom_x.dim(), u.dom_y.dim());
    let ratio = |x: &LevelElement, y: &LevelElement| -> f64 {
        let den = u.dom_x.norm_hi(x) * u.dom_y.norm_hi(y);
        if den <= 0.0 {
            return 0.0;
        }
        u.cod.norm(&u.apply(x, y).expect("sized")).lo / den
    };
    let mut lo = 0.0f64;
    for p in 1..=caps.0 {
        for q in 1..=caps.1 {
            for _ in 0..budget.restarts.max(1) {
                let mut x = LevelElement::new(p, dx, gaussian_vec(&mut rng, p * p * dx)).expect("sized");
                let mut y = LevelElement::new(q, dy, gaussian_vec(&mut rng, q * q * dy)).expect("sized");
                let mut f = ratio(&x, &y);
                let mut step = 0.3;
                for _ in 0..budget.iterations {
                    let x2 = perturb(&mut rng, &x, step);
                    let y2 = perturb(&mut rng, &y, step);
                    let f2 = ratio(&x2, &y2);
                    if f2 > f {
                        (x, y, f) = (x2, y2, f2);
                        step *= 1.5;
                    } else {
                        step *= 0.9;
                    }
                    if step < 1e-6 || f >= hi {
                        break;
                    }
                }
                lo = lo.max(f);
            }
        }
    }
    Ok(Interval::new(lo, hi.max(lo)))
}

fn perturb<R: Rng>(rng: &mut R, x: &LevelElement, step: f64) -> LevelElement {
    let scale = x.frobenius().max(1e-300) / (x.data().len() as f64).sqrt();
    let data = x
        .data()
        .iter()
        .zip(gaussian_vec(rng, x.data().len()))
        .map(|(a, b)| a + b * (step * scale))
        .collect();
    LevelElement::new(x.level(), x.dim(), data).expect("sized")
}

/// `f (x) g` on tensor coordinates.
pub fn tensor_map(f: &OSMap, g: &OSMap, search: Search) -> OSMap {
    let dom = OSpace::tensor(f.dom(), g.dom(), search);
    let cod = OSpace::tensor(f.cod(), g.cod(), search);
    OSMap::new(dom, cod, f.coeff().kron(g.coeff())).expect("sized")
}

/// Coordinate matrix of the swap `b_s (x) c_t -> c_t (x) b_s`.
fn swap(dx: usize, dy: usize) -> CMat {
    CMat::from_fn(dx * dy, dx * dy, |a, b| {
        let (s, t) = (b / dy, b % dy);
        if a == t * dx + s {
            C64::new(1.0, 0.0)
        } else {
            ZERO
        }
    })
}

/// Unitors, associator and symmetry of the monoidal structure.
#[derive(Debug, Clone)]
pub struct StructureMaps {
    /// `C (x) X -> X`.
    pub left_unitor: OSMap,
    /// `X (x) C -> X`.
    pub right_unitor: OSMap,
    /// `(X (x) Y) (x) Z -> X (x) (Y (x) Z)`.
    pub associator: OSMap,
    /// `X (x) Y -> Y (x) X`.
    pub symmetry: OSMap,
}

pub fn structure_maps(x: &OSpace, y: &OSpace, z: &OSpace, search: Search) -> StructureMaps {
    let c = OSpace::scalars();
    let dx = x.dim();
    let left_unitor = OSMap::new(OSpace::tensor(&c, x, search), x.clone(), CMat::identity(dx)).expect("sized");
    let right_unitor = OSMap::new(OSpace::tensor(x, &c, search), x.clone(), CMat::identity(dx)).expect("sized");
    let xy = OSpace::tensor(x, y, search);
    let yz = OSpace::tensor(y, z, search);
    let d3 = dx * y.dim() * z.dim();
    let associator = OSMap::new(
        OSpace::tensor(&xy, z, search),
        OSpace::tensor(x, &yz, search),
        CMat::identity(d3),
    )
    .expect("sized");
    let symmetry = OSMap::new(xy, OSpace::tensor(y, x, search), swap(dx, y.dim())).expect("sized");
    StructureMaps {
        left_unitor,
        right_unitor,
        associator,
        symmetry,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::coords;

    #[test]
    fn elementary_tensor_is_a_cross_norm() {
        let m = OSpace::matrix_algebra(2);
        let d = OSpace::diagonal(2);
        let x = coords(&[1.0, 2.0, -1.0, 0.5]);
        let y = coords(&[3.0, -1.0]);
        let v = elementary(&x, &y);
        let t = OSpace::tensor(&m, &d, Search::default());
        let got = t.level_norm(&v).unwrap();
        let want = m.level_norm(&x).unwrap().hi * d.level_norm(&y).unwrap().hi;
        assert!(got.contains(want, 1e-9), "{got:?} vs {want}");
    }

    #[test]
    fn unitor_preserves_norms() {
        let m = OSpace::matrix_algebra(2);
        let t = OSpace::tensor(&OSpace::scalars(), &m, Search::default());
        let x = LevelElement::from_fn(2, 4, |i, j, s| C64::new((i + 2 * j + s) as f64, s as f64 - 1.0));
        let a = t.level_norm(&x).unwrap();
        let b = m.level_norm(&x).unwrap();
        assert!(a.contains(b.hi, 1e-9), "{a:?} vs {b:?}");
    }

    #[test]
    fn factorization_reproduces_target() {
        let m = OSpace::matrix_algebra(2);
        let v = LevelElement::from_fn(2, 16, |i, j, s| C64::new(((i * 3 + j * 5 + s * 7) % 11) as f64 - 5.0, 0.0));
        let f = factorize(&m, &m, &v, &Search::default()).unwrap().unwrap();
        assert!(f.realize().max_abs_diff(&v) < 1e-9);
        let t = OSpace::tensor(&m, &m, Search::default());
        assert!(f.value >= t.level_norm(&v).unwrap().lo - 1e-9);
    }

    #[test]
    fn symmetry_is_an_involution() {
        let m = OSpace::matrix_algebra(2);
        let d = OSpace::diagonal(3);
        let s = structure_maps(&m, &d, &d, Search::default());
        let back = structure_maps(&d, &m, &d, Search::default()).symmetry;
        let id = back.compose(&s.symmetry).unwrap();
        assert_eq!(id.coeff(), &CMat::identity(12));
    }

    #[test]
    fn linearization_agrees_on_elementary_tensors() {
        let c = OSpace::scalars();
        let d = OSpace::diagonal(2);
        let u = BilinMap::new(d.clone(), d.clone(), c, vec![CMat::from_real(&[&[1.0, 2.0], &[0.0, -1.0]])]).unwrap();
        let x = coords(&[0.5, 1.5]);
        let y = coords(&[2.0, -1.0]);
        let lin = linearize(&u, Search::default());
        let a = lin.apply(&elementary(&x, &y)).unwrap();
        let b = u.apply(&x, &y).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }
}
