//! Upper bounds for completely bounded norms.
//!
//! Every rule bounds `||u||_cb` and so every `||u_n||`; the smallest
//! applicable one is used.

use super::OSMap;
use crate::affine::lbfgs;
use crate::element::LevelElement;
use crate::matrix::{CMat, C64, ZERO};
use crate::space::{OSpace, Realization, Structure};
use crate::svd::{pinv, spectral_norm_unchecked, svd};

pub(super) fn cb_upper(u: &OSMap) -> f64 {
    if u.is_zero() || u.dom().dim() == 0 {
        return 0.0;
    }
    if let Some(c) = u.scalar_identity() {
        return c.norm();
    }
    let mut best = f64::INFINITY;

    match u.cod().structure() {
        Structure::Product { parts } => {
            // ||u||_cb = max over the coordinate projections.
            let v = blocks(parts)
                .iter()
                .zip(parts)
                .map(|(&(off, len), p)| restrict_rows(u, off, len, p).cb_upper())
                .fold(0.0, f64::max);
            best = best.min(v);
        }
        Structure::Coproduct { parts, .. } => {
            let v: f64 = blocks(parts)
                .iter()
                .zip(parts)
                .map(|(&(off, len), p)| restrict_rows(u, off, len, p).cb_upper())
                .sum();
            best = best.min(v);
        }
        Structure::Quotient {
            parent, complement, ..
        } => {
            // Factor through the quotient map by lifting coordinates.
            if let Ok(lift) = OSMap::new(u.dom().clone(), parent.clone(), complement * u.coeff()) {
                best = best.min(lift.cb_upper());
            }
        }
        Structure::Min { parent, .. } => {
            // Maps into a Min space are cb with cb norm equal to the norm.
            if let Ok(v) = u.with_cod(parent) {
                best = best.min(v.cb_upper());
            }
        }
        _ => {}
    }

    match u.dom().structure() {
        Structure::TraceClass { n, .. } => {
            // ||u||_cb = ||[u(e_ij)]||_n for maps out of T_n.
            let n = *n;
            let grid = LevelElement::from_fn(n, u.cod().dim(), |i, j, s| u.coeff()[(s, i * n + j)]);
            best = best.min(u.cod().norm_hi(&grid));
        }
        Structure::Coproduct { parts, .. } => {
            let v = blocks(parts)
                .iter()
                .zip(parts)
                .map(|(&(off, len), p)| restrict_cols(u, off, len, p).cb_upper())
                .fold(0.0, f64::max);
            best = best.min(v);
        }
        Structure::Product { parts } => {
            let v: f64 = blocks(parts)
                .iter()
                .zip(parts)
                .map(|(&(off, len), p)| restrict_cols(u, off, len, p).cb_upper())
                .sum();
            best = best.min(v);
        }
        Structure::Quotient {
            parent, complement, ..
        } => {
            // u o q has the same cb norm as u since q is a complete quotient.
            if let Ok(v) = OSMap::new(parent.clone(), u.cod().clone(), u.coeff() * &complement.adjoint()) {
                best = best.min(v.cb_upper());
            }
        }
        _ => {}
    }

    if let (Some(rd), Some(rc)) = (u.dom().concrete_form(), u.cod().concrete_form()) {
        if let Some(c) = corner_scale(u, &rd, &rc) {
            best = best.min(c);
        }
        if rd.ambient * rc.ambient <= 64 {
            best = best.min(haagerup_bound(&extension_images(u, &rd, &rc), rd.ambient, rc.ambient));
        }
    }

    best.min(basis_bound(u))
}

/// `sum_s ||u(b_s)|| kappa_s`.
fn basis_bound(u: &OSMap) -> f64 {
    let kappa = u.dom().coordinate_bounds();
    let mut total = 0.0;
    for (s, k) in kappa.iter().enumerate() {
        let img = u.image(s);
        if img.iter().all(|z| *z == ZERO) {
            continue;
        }
        total += u.cod().norm_hi(&LevelElement::vector(&img)) * k;
    }
    total
}

fn blocks(parts: &[OSpace]) -> Vec<(usize, usize)> {
    let mut off = 0;
    parts
        .iter()
        .map(|p| {
            let b = (off, p.dim());
            off += p.dim();
            b
        })
        .collect()
}

fn restrict_rows(u: &OSMap, off: usize, len: usize, part: &OSpace) -> OSMap {
    let c = u.coeff().block(off, 0, len, u.dom().dim());
    OSMap::new(u.dom().clone(), part.clone(), c).expect("block shape")
}

fn restrict_cols(u: &OSMap, off: usize, len: usize, part: &OSpace) -> OSMap {
    let c = u.coeff().block(0, off, u.cod().dim(), len);
    OSMap::new(part.clone(), u.cod().clone(), c).expect("block shape")
}

/// `|c|` when the realised images are `c` times a top-left corner copy of
/// the realised domain basis.
fn corner_scale(u: &OSMap, rd: &Realization, rc: &Realization) -> Option<f64> {
    if rc.ambient < rd.ambient {
        return None;
    }
    let mut c: Option<C64> = None;
    for (s, b) in rd.basis.iter().enumerate() {
        let img = rc.combine(&u.image(s));
        let mut emb = CMat::zeros(rc.ambient, rc.ambient);
        emb.set_block(0, 0, b);
        let scale = b.frobenius().max(img.frobenius()).max(1e-300);
        let cs = *c.get_or_insert_with(|| emb.inner(&img) / emb.inner(&emb));
        if (&img - &emb.scale(cs)).max_abs() > 1e-12 * scale {
            return None;
        }
    }
    c.map(|z| z.norm())
}

/// Images `Psi(E_pq)` of the extension `Psi = R_cod o u o P` to all of
/// `M_j`, with `P` the Frobenius-orthogonal coordinate projection.
fn extension_images(u: &OSMap, rd: &Realization, rc: &Realization) -> Vec<CMat> {
    let j = rd.ambient;
    let proj = pinv(&rd.stacked(), 1e-12);
    let realized: Vec<CMat> = (0..u.dom().dim()).map(|s| rc.combine(&u.image(s))).collect();
    let mut out = Vec::with_capacity(j * j);
    for pq in 0..j * j {
        let mut m = CMat::zeros(rc.ambient, rc.ambient);
        for (t, r) in realized.iter().enumerate() {
            let w = proj[(t, pq)];
            if w != ZERO {
                m.axpy(w, r);
            }
        }
        out.push(m);
    }
    out
}

/// Bound `||sum L_r L_r^*||^{1/2} ||sum R_r^* R_r||^{1/2}` for the map
/// `E_pq -> images[p*j+q]` from `M_j` to `M_k`, using the decomposition
/// read off the singular value decomposition of the realigned Choi matrix,
/// with the split between left and right factors optimised per term.
pub(crate) fn haagerup_bound(images: &[CMat], j: usize, k: usize) -> f64 {
    // K[(a, p), (q, b)] = Psi(E_pq)[a, b]
    let mut kmat = CMat::zeros(k * j, j * k);
    for p in 0..j {
        for q in 0..j {
            let img = &images[p * j + q];
            for a in 0..k {
                for b in 0..k {
                    kmat[(a * j + p, q * k + b)] = img[(a, b)];
                }
            }
        }
    }
    let d = svd(&kmat);
    let r = d.s.iter().filter(|&&s| s > 1e-14 * d.s[0].max(1e-300)).count();
    if r == 0 {
        return 0.0;
    }
    let mut a_terms = Vec::with_capacity(r);
    let mut b_terms = Vec::with_capacity(r);
    for t in 0..r {
        let l = CMat::from_fn(k, j, |a, p| d.u[(a * j + p, t)]);
        let rr = CMat::from_fn(j, k, |q, b| d.v[(q * k + b, t)].conj());
        a_terms.push((&l * &l.adjoint()).scale_re(d.s[t]));
        b_terms.push((&rr.adjoint() * &rr).scale_re(d.s[t]));
    }
    let value = |t: &[f64]| -> f64 {
        let (a, b) = weighted_sums(&a_terms, &b_terms, t);
        (spectral_norm_unchecked(&a) * spectral_norm_unchecked(&b)).sqrt()
    };
    let mut best = value(&vec![0.0; r]);
    // Balanced start: equalise each term's contribution.
    let balanced: Vec<f64> = a_terms
        .iter()
        .zip(&b_terms)
        .map(|(a, b)| 0.5 * (spectral_norm_unchecked(b) / spectral_norm_unchecked(a).max(1e-300)).ln())
        .collect();
    best = best.min(value(&balanced));
    if r == 1 {
        return best;
    }
    for start in [vec![0.0; r], balanced] {
        let mut t = start;
        for rel in [1e-2, 1e-4, 1e-6] {
            let mut fg = |x: &[f64]| {
                let (a, b) = weighted_sums(&a_terms, &b_terms, x);
                let (fa, ga) = smoothed_max(&a, rel);
                let (fb, gb) = smoothed_max(&b, rel);
                let v = (spectral_norm_unchecked(&a) * spectral_norm_unchecked(&b)).sqrt();
                if v < best {
                    best = v;
                }
                let mut grad = Vec::with_capacity(r);
                for (i, &xi) in x.iter().enumerate() {
                    let w = xi.exp();
                    let da = w * ga.inner(&a_terms[i]).re / fa;
                    let db = -(1.0 / w) * gb.inner(&b_terms[i]).re / fb;
                    grad.push(0.5 * (da + db));
                }
                (0.5 * (fa.ln() + fb.ln()), grad)
            };
            t = lbfgs(&mut fg, t, 150, 1e-12);
        }
    }
    best
}

fn weighted_sums(a_terms: &[CMat], b_terms: &[CMat], t: &[f64]) -> (CMat, CMat) {
    let k = a_terms[0].rows();
    let mut a = CMat::zeros(k, k);
    let mut b = CMat::zeros(k, k);
    for ((at, bt), &x) in a_terms.iter().zip(b_terms).zip(t) {
        let w = x.exp();
        a.axpy(C64::new(w, 0.0), at);
        b.axpy(C64::new(1.0 / w, 0.0), bt);
    }
    (a, b)
}

/// Log-sum-exp smoothing of the largest singular value, with the gradient
/// matrix `U diag(softmax) V^*`. `rel` scales the smoothing to the norm.
fn smoothed_max(a: &CMat, rel: f64) -> (f64, CMat) {
    let d = svd(a);
    let smax = d.s[0];
    let mu = (rel * smax).max(1e-300);
    let e: Vec<f64> = d.s.iter().map(|s| ((s - smax) / mu).exp()).collect();
    let tot: f64 = e.iter().sum();
    let n = a.rows();
    let mut g = CMat::zeros(n, a.cols());
    for (t, et) in e.iter().enumerate() {
        let w = et / tot;
        if w < 1e-18 {
            continue;
        }
        for i in 0..n {
            for jj in 0..a.cols() {
                g[(i, jj)] += d.u[(i, t)] * d.v[(jj, t)].conj() * w;
            }
        }
    }
    (smax + mu * tot.ln(), g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transpose_images(j: usize) -> Vec<CMat> {
        (0..j * j).map(|pq| CMat::unit(j, j, pq % j, pq / j)).collect()
    }

    fn identity_images(j: usize) -> Vec<CMat> {
        (0..j * j).map(|pq| CMat::unit(j, j, pq / j, pq % j)).collect()
    }

    #[test]
    fn identity_is_one() {
        assert!((haagerup_bound(&identity_images(3), 3, 3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transpose_is_dimension() {
        // The transpose on M_j has cb norm j.
        for j in 2..=3 {
            let b = haagerup_bound(&transpose_images(j), j, j);
            assert!((b - j as f64).abs() < 1e-6, "{j}: {b}");
        }
    }

    #[test]
    fn trace_functional_is_dimension() {
        // a -> Tr(a) into M_1 has cb norm j.
        let j = 3;
        let imgs: Vec<CMat> = (0..j * j)
            .map(|pq| CMat::scalar(C64::new(if pq / j == pq % j { 1.0 } else { 0.0 }, 0.0)))
            .collect();
        let b = haagerup_bound(&imgs, j, 1);
        assert!((b - 3.0).abs() < 1e-6, "{b}");
    }
}
