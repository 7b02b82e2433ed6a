//! Singular value decomposition by one-sided Jacobi rotations, and the norms
//! and subspace computations built on it.
//!
//! The one-sided (Hestenes) variant orthogonalises the columns of `A`, which is
//! the same as diagonalising the Gram matrix `A^*A` by Jacobi rotations without
//! ever forming it. Small singular values keep full relative accuracy, which
//! the trace norm needs.

use crate::error::{invalid, Result};
use crate::matrix::{vecops, CMat, C64, ZERO};

const MAX_SWEEPS: usize = 80;
const ROT_EPS: f64 = 1e-15;

/// `A = U * diag(s) * V^*` with `U` (m x m) and `V` (n x n) unitary and
/// `s` sorted in decreasing order, `len(s) = min(m, n)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn svd(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    if m >= n {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.adjoint());
        Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        }
    }
}

fn svd_tall(a: &CMat) -> Svd {
    let (m, n) = a.shape();
    // Work column-major: w[j] is column j.
    let mut w: Vec<Vec<C64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            let mut e = vec![ZERO; n];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = vecops::dot(&w[p], &w[q]);
                let g = gamma.norm();
                if g <= ROT_EPS * (alpha * beta).sqrt() || g < 1e-300 {
                    continue;
                }
                rotated = true;
                let phase_conj = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s, phase_conj);
                rotate(&mut v, p, q, c, s, phase_conj);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = w.iter().map(|col| (vecops::norm(col), 0)).collect();
    for (j, o) in order.iter_mut().enumerate() {
        o.1 = j;
    }
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let smax = order.first().map_or(0.0, |o| o.0);
    let thresh = smax * 1e-14;
    let mut s = Vec::with_capacity(n);
    let mut vm = CMat::zeros(n, n);
    let mut ucols: Vec<Vec<C64>> = Vec::with_capacity(m);
    for (k, &(sigma, j)) in order.iter().enumerate() {
        s.push(sigma);
        vm.set_col(k, &v[j]);
        if sigma > thresh && sigma > 0.0 {
            let mut col = w[j].clone();
            vecops::scale(&mut col, C64::new(1.0 / sigma, 0.0));
            ucols.push(col);
        }
    }
    let u = complete_orthonormal(m, ucols);
    Svd { u, s, v: vm }
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase_conj: C64) {
    let len = cols[p].len();
    for i in 0..len {
        let wp = cols[p][i];
        let wq = cols[q][i] * phase_conj;
        cols[p][i] = wp * c - wq * s;
        cols[q][i] = wp * s + wq * c;
    }
}

/// Extends orthonormal columns to a unitary `m x m` matrix.
fn complete_orthonormal(m: usize, mut cols: Vec<Vec<C64>>) -> CMat {
    // Re-orthonormalise the supplied columns first (modified Gram-Schmidt).
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
    for mut c in cols.drain(..) {
        for b in &basis {
            let d = vecops::dot(b, &c);
            vecops::axpy(&mut c, -d, b);
        }
        let nrm = vecops::norm(&c);
        if nrm > 1e-8 {
            vecops::scale(&mut c, C64::new(1.0 / nrm, 0.0));
            basis.push(c);
        }
    }
    let mut e = 0;
    while basis.len() < m && e < m {
        let mut c = vec![ZERO; m];
        c[e] = C64::new(1.0, 0.0);
        e += 1;
        for _ in 0..2 {
            for b in &basis {
                let d = vecops::dot(b, &c);
                vecops::axpy(&mut c, -d, b);
            }
        }
        let nrm = vecops::norm(&c);
        if nrm > 1e-6 {
            vecops::scale(&mut c, C64::new(1.0 / nrm, 0.0));
            basis.push(c);
        }
    }
    let mut u = CMat::zeros(m, m);
    for (j, c) in basis.iter().enumerate() {
        u.set_col(j, c);
    }
    u
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    svd(a).s
}

/// Operator norm: the largest singular value.
pub fn spectral_norm(a: &CMat) -> Result<f64> {
    a.ensure_finite()?;
    Ok(spectral_norm_unchecked(a))
}

pub(crate) fn spectral_norm_unchecked(a: &CMat) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    svd(a).s[0]
}

/// Sum of singular values of a square matrix.
pub fn trace_norm(a: &CMat) -> Result<f64> {
    if !a.is_square() {
        return invalid(format!(
            "trace norm needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        ));
    }
    a.ensure_finite()?;
    Ok(svd(a).s.iter().sum())
}

/// Numerical rank with relative threshold `tol * s_max`.
pub fn rank(a: &CMat, tol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax.max(1.0)).count()
}

/// Orthonormal basis (as columns) of the null space of `a`.
pub fn null_space(a: &CMat, tol: f64) -> CMat {
    let n = a.cols();
    let d = svd(a);
    let r = count_above(&d.s, tol);
    d.v.block(0, r, n, n - r)
}

/// Orthonormal basis (as columns) of the column space of `a`.
pub fn range_basis(a: &CMat, tol: f64) -> CMat {
    let m = a.rows();
    let d = svd(a);
    let r = count_above(&d.s, tol);
    d.u.block(0, 0, m, r)
}

fn count_above(s: &[f64], tol: f64) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax.max(1.0)).count()
}

/// Moore-Penrose pseudoinverse.
pub fn pinv(a: &CMat, tol: f64) -> CMat {
    let (m, n) = a.shape();
    let d = svd(a);
    let r = count_above(&d.s, tol);
    let mut out = CMat::zeros(n, m);
    for k in 0..r {
        let inv = 1.0 / d.s[k];
        for i in 0..n {
            let vik = d.v[(i, k)] * inv;
            for j in 0..m {
                out[(i, j)] += vik * d.u[(j, k)].conj();
            }
        }
    }
    out
}

/// Ratio of extreme singular values; `inf` for rank-deficient input.
pub fn condition_number(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Largest singular value with its left and right singular vectors.
pub fn top_singular(a: &CMat) -> (f64, Vec<C64>, Vec<C64>) {
    let d = svd(a);
    let s = d.s.first().copied().unwrap_or(0.0);
    (s, d.u.col(0), d.v.col(0))
}

/// The contraction `V` maximising `Re Tr(V h)`; the maximum is `||h||_1`.
///
/// `V` has the shape of `h^*`.
pub fn polar_maximizer(h: &CMat) -> CMat {
    let d = svd(h);
    let (m, n) = h.shape();
    let r = count_above(&d.s, 1e-15);
    let mut out = CMat::zeros(n, m);
    for k in 0..r {
        for i in 0..n {
            let vik = d.v[(i, k)];
            for j in 0..m {
                out[(i, j)] += vik * d.u[(j, k)].conj();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_mat(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CMat::from_fn(rows, cols, |_, _| C64::new(next(), next()))
    }

    fn reconstruct(d: &Svd, m: usize, n: usize) -> CMat {
        let mut s = CMat::zeros(m, n);
        for (k, &x) in d.s.iter().enumerate() {
            s[(k, k)] = C64::new(x, 0.0);
        }
        &(&d.u * &s) * &d.v.adjoint()
    }

    #[test]
    fn reconstructs_tall_wide_and_square() {
        for &(m, n) in &[(4, 4), (5, 3), (2, 6), (1, 1), (3, 1)] {
            let a = lcg_mat(m, n, (m * 10 + n) as u64);
            let d = svd(&a);
            assert!(reconstruct(&d, m, n).max_abs_diff(&a) < 1e-12, "{m}x{n}");
            let uu = &d.u.adjoint() * &d.u;
            assert!(uu.max_abs_diff(&CMat::identity(m)) < 1e-12);
            let vv = &d.v.adjoint() * &d.v;
            assert!(vv.max_abs_diff(&CMat::identity(n)) < 1e-12);
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_has_complete_u() {
        let mut a = CMat::zeros(3, 3);
        a[(0, 1)] = C64::new(2.0, 0.0);
        let d = svd(&a);
        assert_eq!(d.s, vec![2.0, 0.0, 0.0]);
        let uu = &d.u.adjoint() * &d.u;
        assert!(uu.max_abs_diff(&CMat::identity(3)) < 1e-12);
    }

    #[test]
    fn norms_of_small_examples() {
        assert!((spectral_norm(&CMat::identity(2)).unwrap() - 1.0).abs() < 1e-15);
        let n = CMat::from_real(&[&[0.0, 2.0], &[0.0, 0.0]]);
        assert!((spectral_norm(&n).unwrap() - 2.0).abs() < 1e-15);
        assert!((trace_norm(&CMat::identity(2)).unwrap() - 2.0).abs() < 1e-15);
        assert!((trace_norm(&n).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn trace_norm_rejects_rectangular() {
        assert!(trace_norm(&CMat::zeros(2, 3)).is_err());
    }

    #[test]
    fn spectral_norm_rejects_nan() {
        let mut a = CMat::identity(2);
        a[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(spectral_norm(&a).is_err());
    }

    #[test]
    fn null_space_and_pinv() {
        let a = CMat::from_real(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.cols(), 1);
        assert!((&a * &ns).max_abs() < 1e-14);
        let p = pinv(&a, 1e-12);
        assert!((&(&a * &p) * &a).max_abs_diff(&a) < 1e-14);
        assert_eq!(rank(&a, 1e-12), 2);
        assert_eq!(range_basis(&a, 1e-12).cols(), 2);
    }

    #[test]
    fn polar_maximizer_attains_trace_norm() {
        let h = lcg_mat(3, 2, 5);
        let v = polar_maximizer(&h);
        assert_eq!(v.shape(), (2, 3));
        let val = (&v * &h).trace().re;
        let tn: f64 = singular_values(&h).iter().sum();
        assert!((val - tn).abs() < 1e-12);
        assert!(spectral_norm(&v).unwrap() <= 1.0 + 1e-12);
    }
}
