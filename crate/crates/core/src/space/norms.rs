//! Level norms for each kind of space.

use super::{OSpace, Realization, Structure};
use crate::affine::{min_norm_over_affine, AffineOptions, NormKind};
use crate::config::Search;
use crate::element::LevelElement;
use crate::interval::Interval;
use crate::matrix::{CMat, C64, ZERO};
use crate::rng::{derive, gaussian_vec, unitary};
use crate::svd::{null_space, pinv, polar_maximizer, spectral_norm_unchecked, top_singular};

pub(super) fn level_norm(space: &OSpace, x: &LevelElement) -> Interval {
    match space.structure() {
        Structure::Zero => Interval::ZERO,
        Structure::Concrete(c) => {
            Interval::exact(spectral_norm_unchecked(&c.realization().realize(x)))
        }
        Structure::Product { parts } => {
            let dims: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
            let blocks = x.split(&dims).expect("dimensions checked");
            parts
                .iter()
                .zip(&blocks)
                .map(|(p, b)| p.norm(b))
                .fold(Interval::ZERO, |acc, v| acc.max(&v))
        }
        Structure::Coproduct { parts, search } => coproduct_norm(parts, search, x),
        Structure::Subspace { parent, embed } => {
            parent.norm(&x.map_coords(embed).expect("dimensions checked"))
        }
        Structure::Quotient {
            parent,
            kernel,
            complement,
        } => quotient_norm(parent, kernel, complement, x),
        Structure::Dual { parent, search } => crate::dual::dual_norm(parent, x, search),
        Structure::TraceClass { n, search } => crate::dual::trace_class_norm(*n, x, search),
        Structure::Tensor {
            left,
            right,
            search,
        } => crate::tensor::tensor_norm(left, right, x, search),
        Structure::Min { parent, search } => min_norm(parent, x, search),
        Structure::Oracle(o) => o.level_norm(x),
    }
}

/// Upper bound only; skips lower-bound searches where they are costly.
pub(super) fn upper(space: &OSpace, x: &LevelElement) -> f64 {
    match space.structure() {
        Structure::Dual { parent, .. } => crate::dual::dual_upper(parent, x),
        Structure::TraceClass { n, .. } => crate::dual::trace_class_upper(*n, x),
        Structure::Coproduct { parts, .. } => {
            let dims: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
            let blocks = x.split(&dims).expect("dimensions checked");
            parts.iter().zip(&blocks).map(|(p, b)| p.norm_hi(b)).sum()
        }
        Structure::Product { parts } => {
            let dims: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
            let blocks = x.split(&dims).expect("dimensions checked");
            parts
                .iter()
                .zip(&blocks)
                .map(|(p, b)| p.norm_hi(b))
                .fold(0.0, f64::max)
        }
        Structure::Subspace { parent, embed } => {
            parent.norm_hi(&x.map_coords(embed).expect("dimensions checked"))
        }
        Structure::Min { parent, .. } => parent.norm_hi(x),
        Structure::Tensor {
            left,
            right,
            search,
        } => crate::tensor::tensor_upper(left, right, x, search),
        _ => level_norm(space, x).hi,
    }
}

fn coproduct_norm(parts: &[OSpace], search: &Search, x: &LevelElement) -> Interval {
    let dims: Vec<usize> = parts.iter().map(|p| p.dim()).collect();
    let blocks = x.split(&dims).expect("dimensions checked");
    let comps: Vec<Interval> = parts.iter().zip(&blocks).map(|(p, b)| p.norm(b)).collect();
    let sum = comps.iter().fold(Interval::ZERO, |a, c| a.add(c));
    if x.level() == 1 {
        return sum;
    }
    let lo0 = comps.iter().map(|c| c.lo).fold(0.0, f64::max);
    if sum.hi - lo0 <= 1e-14 {
        return Interval::new(lo0, sum.hi);
    }
    let reals: Vec<CMat> = parts
        .iter()
        .zip(&blocks)
        .map(|(p, b)| p.cc_form().expect("checked at construction").realize(b))
        .collect();
    let ks: Vec<usize> = parts
        .iter()
        .map(|p| p.cc_form().expect("checked at construction").ambient)
        .collect();
    let lo = lo0.max(compression_ascent(&reals, &ks, x.level(), search));
    Interval::new(lo.min(sum.hi), sum.hi)
}

/// Lower bound for the coproduct norm: the largest
/// `|| sum_l (1 (x) V_l) R_l (1 (x) W_l) ||` over contractions
/// `V_l: C^k_l -> C^m`, `W_l: C^m -> C^k_l`. Each choice defines a
/// complete contraction out of the coproduct, so every value is sound.
fn compression_ascent(reals: &[CMat], ks: &[usize], n: usize, search: &Search) -> f64 {
    let m: usize = ks.iter().sum();
    let parts = reals.len();
    let mut offsets = Vec::with_capacity(parts);
    let mut acc = 0;
    for &k in ks {
        offsets.push(acc);
        acc += k;
    }
    let mut rng = derive(search.seed, 0xC0_9B0D + n as u64);
    let mut best = 0.0f64;
    for restart in 0..search.restarts.max(2) {
        let (mut vs, mut ws): (Vec<CMat>, Vec<CMat>) = match restart {
            0 => (
                ks.iter().zip(&offsets).map(|(&k, &o)| injection(m, k, o)).collect(),
                ks.iter()
                    .enumerate()
                    .map(|(l, &k)| injection(m, k, offsets[(l + 1) % parts]).adjoint())
                    .collect(),
            ),
            1 => (
                ks.iter().map(|&k| injection(m, k, 0)).collect(),
                ks.iter().map(|&k| injection(m, k, 0).adjoint()).collect(),
            ),
            _ => {
                let u = unitary(&mut rng, m);
                let w = unitary(&mut rng, m);
                let vs = ks.iter().zip(&offsets).map(|(&k, &o)| u.block(0, o, m, k)).collect();
                let ws = ks
                    .iter()
                    .zip(&offsets)
                    .map(|(&k, &o)| w.block(0, o, m, k).adjoint())
                    .collect();
                (vs, ws)
            }
        };
        let mut val = 0.0;
        for _ in 0..search.iterations {
            let s = assemble(reals, &vs, &ws, n, m);
            let (sigma, a, b) = top_singular(&s);
            val = sigma;
            // Update every V_l against the current singular pair.
            for l in 0..parts {
                let c = CMat::column(&reals[l].mat_vec(&kron_id(n, &ws[l]).mat_vec(&b)));
                vs[l] = polar_maximizer(&outer_blocks(&c, &a, n, ks[l], m));
            }
            let s = assemble(reals, &vs, &ws, n, m);
            let (_, a, b) = top_singular(&s);
            for l in 0..parts {
                let e = reals[l].adjoint().mat_vec(&kron_id(n, &vs[l].adjoint()).mat_vec(&a));
                // Re a^*(1(x)V) R (1(x)W) b = Re Tr(W sum_j b_j e_j^*)
                let h = outer_blocks(&CMat::column(&b), &e, n, m, ks[l]);
                ws[l] = polar_maximizer(&h);
            }
            let next = spectral_norm_unchecked(&assemble(reals, &vs, &ws, n, m));
            if next <= val * (1.0 + 1e-12) {
                val = val.max(next);
                break;
            }
            val = next;
        }
        best = best.max(val);
    }
    best
}

fn injection(m: usize, k: usize, offset: usize) -> CMat {
    let mut v = CMat::zeros(m, k);
    for i in 0..k {
        v[(offset + i, i)] = C64::new(1.0, 0.0);
    }
    v
}

fn kron_id(n: usize, a: &CMat) -> CMat {
    CMat::identity(n).kron(a)
}

fn assemble(reals: &[CMat], vs: &[CMat], ws: &[CMat], n: usize, m: usize) -> CMat {
    let mut s = CMat::zeros(n * m, n * m);
    for ((r, v), w) in reals.iter().zip(vs).zip(ws) {
        let t = &(&kron_id(n, v) * r) * &kron_id(n, w);
        s = &s + &t;
    }
    s
}

/// `sum_i c_i a_i^*` for block vectors `c` (blocks of `p`) and `a` (blocks of `q`).
fn outer_blocks(c: &CMat, a: &[C64], n: usize, p: usize, q: usize) -> CMat {
    let mut h = CMat::zeros(p, q);
    for i in 0..n {
        for r in 0..p {
            let cr = c[(i * p + r, 0)];
            if cr == ZERO {
                continue;
            }
            for t in 0..q {
                h[(r, t)] += cr * a[i * q + t].conj();
            }
        }
    }
    h
}

fn quotient_norm(parent: &OSpace, kernel: &CMat, complement: &CMat, y: &LevelElement) -> Interval {
    let x = y.map_coords(complement).expect("dimensions checked");
    if kernel.cols() == 0 {
        return parent.norm(&x);
    }
    let form = parent.concrete_form().expect("checked at construction");
    quotient_affine(&form, kernel, &x).interval
}

/// Minimises the realised norm over the coset `x + M_n(N)`.
pub(crate) fn quotient_affine(
    form: &Realization,
    kernel: &CMat,
    x: &LevelElement,
) -> crate::affine::AffineMin {
    let n = x.level();
    let k = form.ambient;
    let target = form.realize(x);
    let mut basis = Vec::with_capacity(n * n * kernel.cols());
    for i in 0..n {
        for j in 0..n {
            for t in 0..kernel.cols() {
                let mut m = CMat::zeros(n * k, n * k);
                m.set_block(i * k, j * k, &form.combine(&kernel.col(t)));
                basis.push(m);
            }
        }
    }
    min_norm_over_affine(&target, &basis, NormKind::Spectral, &AffineOptions::default())
        .expect("kernel realisations are independent")
}

/// Min quantisation: `sup_{xi, eta} || sum_ij conj(xi_i) eta_j x_ij ||_X`
/// over unit vectors, bounded above by the norm of `X` itself.
fn min_norm(parent: &OSpace, x: &LevelElement, search: &Search) -> Interval {
    let own = parent.norm(x);
    let n = x.level();
    if n == 1 {
        return own;
    }
    let mut hi = own.hi;
    let lo = match parent.concrete_form() {
        Some(form) => {
            // Transposing the model keeps level-1 norms, so it also
            // dominates the smallest structure.
            let flipped = Realization {
                ambient: form.ambient,
                basis: form.basis.iter().map(|b| b.transpose()).collect(),
            };
            hi = hi.min(spectral_norm_unchecked(&flipped.realize(x)));
            product_state_ascent(&form, x, search)
        }
        None => {
            let mut rng = derive(search.seed, 0x313 + n as u64);
            let mut best = 0.0f64;
            for _ in 0..search.restarts.max(1) * 4 {
                let xi = unit(gaussian_vec(&mut rng, n));
                let eta = unit(gaussian_vec(&mut rng, n));
                let v = contract_grid(x, &xi, &eta);
                best = best.max(parent.norm(&LevelElement::vector(&v)).lo);
            }
            best
        }
    };
    Interval::new(lo.min(hi), hi)
}

fn unit(mut v: Vec<C64>) -> Vec<C64> {
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm > 0.0 {
        for z in &mut v {
            *z /= nrm;
        }
    }
    v
}

fn contract_grid(x: &LevelElement, xi: &[C64], eta: &[C64]) -> Vec<C64> {
    let n = x.level();
    let mut v = vec![ZERO; x.dim()];
    for i in 0..n {
        for j in 0..n {
            let w = xi[i].conj() * eta[j];
            for (acc, c) in v.iter_mut().zip(x.entry(i, j)) {
                *acc += w * c;
            }
        }
    }
    v
}

/// Maximises `|(xi (x) a)^* R (eta (x) b)|` over unit vectors by alternating
/// singular-vector updates.
fn product_state_ascent(form: &Realization, x: &LevelElement, search: &Search) -> f64 {
    let n = x.level();
    let k = form.ambient;
    let r = form.realize(x);
    let mut rng = derive(search.seed, 0x5EED + n as u64);
    let mut best = 0.0f64;
    for restart in 0..search.restarts.max(1) {
        let (mut xi, mut eta) = if restart == 0 {
            let (_, u, v) = top_singular(&r);
            // Dominant factors of the top singular vectors.
            (leading_factor(&u, n, k), leading_factor(&v, n, k))
        } else {
            (unit(gaussian_vec(&mut rng, n)), unit(gaussian_vec(&mut rng, n)))
        };
        let mut val = 0.0;
        for _ in 0..search.iterations.max(5) {
            let m = form.combine(&contract_grid(x, &xi, &eta));
            let (s1, a, b) = top_singular(&m);
            // Fix a, b: scalar matrix [a^* R_ij b].
            let mut sm = CMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let blk = r.block(i * k, j * k, k, k);
                    let bv = blk.mat_vec(&b);
                    sm[(i, j)] = a.iter().zip(&bv).map(|(p, q)| p.conj() * q).sum();
                }
            }
            let (s2, u, v) = top_singular(&sm);
            // sm's top pair gives xi^* sm eta = s2 with xi = u, eta = v, and
            // the contracted grid uses conj(xi_i) eta_j.
            xi = u;
            eta = v;
            let gained = s2.max(s1);
            if gained <= val * (1.0 + 1e-13) {
                val = val.max(gained);
                break;
            }
            val = gained;
        }
        best = best.max(val);
    }
    best
}

fn leading_factor(v: &[C64], n: usize, k: usize) -> Vec<C64> {
    // Reshape to n x k and take the top left singular vector.
    let m = CMat::from_fn(n, k, |i, p| v[i * k + p]);
    let (_, u, _) = top_singular(&m);
    u
}

/// Level-1 norm of the functional `x -> sum_s f_s x_s` on a concrete space:
/// the least trace norm of an extension to `M_k`.
pub(crate) fn functional_norm(form: &Realization, f: &[C64]) -> Interval {
    let k = form.ambient;
    // Extension W must satisfy sum_pq W_pq (B_s)_pq = f_s, i.e. A w = f with
    // A = stacked^T.
    let a = form.stacked().transpose();
    let w0 = pinv(&a, 1e-13).mat_vec(f);
    let target = CMat::from_vec(k, k, w0).expect("k^2 entries");
    let ns = null_space(&a, 1e-12);
    let basis: Vec<CMat> = (0..ns.cols())
        .map(|c| CMat::from_vec(k, k, ns.col(c)).expect("k^2 entries"))
        .collect();
    min_norm_over_affine(&target, &basis, NormKind::Trace, &AffineOptions::default())
        .expect("null space basis is orthonormal")
        .interval
}

pub(super) fn coordinate_bounds(space: &OSpace) -> Vec<f64> {
    let d = space.dim();
    let unit_f = |s: usize| {
        let mut f = vec![ZERO; d];
        f[s] = C64::new(1.0, 0.0);
        f
    };
    match space.structure() {
        Structure::Zero => vec![],
        Structure::Concrete(c) => {
            let form = c.realization();
            (0..d).map(|s| functional_norm(&form, &unit_f(s)).hi).collect()
        }
        Structure::Product { parts } | Structure::Coproduct { parts, .. } => parts
            .iter()
            .flat_map(|p| p.coordinate_bounds().to_vec())
            .collect(),
        Structure::Subspace { parent, embed } => {
            if let Some(form) = space.concrete_form() {
                return (0..d).map(|s| functional_norm(&form, &unit_f(s)).hi).collect();
            }
            let left = pinv(embed, 1e-12);
            let kp = parent.coordinate_bounds();
            (0..d)
                .map(|s| (0..parent.dim()).map(|t| left[(s, t)].norm() * kp[t]).sum())
                .collect()
        }
        Structure::Quotient {
            parent, complement, ..
        } => {
            let form = parent.concrete_form().expect("checked at construction");
            (0..d)
                .map(|s| {
                    let f: Vec<C64> = (0..parent.dim()).map(|t| complement[(t, s)].conj()).collect();
                    functional_norm(&form, &f).hi
                })
                .collect()
        }
        Structure::Dual { parent, .. } => (0..d)
            .map(|s| parent.norm_hi(&LevelElement::vector(&unit_f(s))))
            .collect(),
        Structure::TraceClass { .. } => vec![1.0; d],
        Structure::Tensor { left, right, .. } => {
            let (kl, kr) = (left.coordinate_bounds(), right.coordinate_bounds());
            kl.iter()
                .flat_map(|a| kr.iter().map(move |b| a * b))
                .collect()
        }
        Structure::Min { parent, .. } => parent.coordinate_bounds().to_vec(),
        Structure::Oracle(o) => (0..d)
            .map(|s| o.coordinate_bound(s).unwrap_or(f64::INFINITY))
            .collect(),
    }
}
