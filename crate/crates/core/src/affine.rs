//! Norm minimisation over an affine matrix subspace.
//!
//! Computes `inf_c || T + sum_s c_s B_s ||` for the spectral norm (quotient
//! norms, minimal preimages) and for the trace norm (dual norms of
//! functionals on concrete spaces). Both problems are convex.
//!
//! The upper bound is the best objective value at an evaluated point. The
//! lower bound comes from a dual certificate: for any `Z` orthogonal to every
//! `B_s`, `|<Z, T>| / ||Z||_dual` bounds the infimum from below, where the
//! dual of the spectral norm is the trace norm and vice versa. Candidates for
//! `Z` are gradients of smoothed objectives near the optimum and
//! least-squares completions on the active singular subspace.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Result};
use crate::interval::Interval;
use crate::matrix::{CMat, C64, ZERO};
use crate::svd::{pinv, rank, spectral_norm_unchecked, svd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Spectral,
    Trace,
}

impl NormKind {
    fn eval(&self, a: &CMat) -> f64 {
        match self {
            NormKind::Spectral => spectral_norm_unchecked(a),
            NormKind::Trace => svd(a).s.iter().sum(),
        }
    }

    fn dual_eval(&self, a: &CMat) -> f64 {
        match self {
            NormKind::Spectral => svd(a).s.iter().sum(),
            NormKind::Trace => spectral_norm_unchecked(a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineOptions {
    /// Target width of the returned interval.
    pub gap_tol: f64,
    /// L-BFGS iterations per smoothing stage.
    pub stage_iterations: usize,
    /// Number of smoothing stages; the last uses `scale * 10^-stages`.
    pub stages: usize,
}

impl Default for AffineOptions {
    fn default() -> Self {
        AffineOptions {
            gap_tol: 1e-9,
            stage_iterations: 400,
            stages: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AffineMin {
    pub interval: Interval,
    /// Coefficients of the best point found.
    pub coeffs: Vec<C64>,
    /// `T + sum c_s B_s` at the best point.
    pub point: CMat,
}

/// Certified interval for `inf_c ||target + sum c_s basis_s||` (spectral).
pub fn min_spectral_over_affine(target: &CMat, basis: &[CMat]) -> Result<Interval> {
    Ok(min_norm_over_affine(target, basis, NormKind::Spectral, &AffineOptions::default())?.interval)
}

pub fn min_norm_over_affine(
    target: &CMat,
    basis: &[CMat],
    kind: NormKind,
    opts: &AffineOptions,
) -> Result<AffineMin> {
    target.ensure_finite()?;
    for b in basis {
        if b.shape() != target.shape() {
            return shape(format!(
                "basis matrix {}x{} does not match target {}x{}",
                b.rows(),
                b.cols(),
                target.rows(),
                target.cols()
            ));
        }
        b.ensure_finite()?;
    }
    if kind == NormKind::Trace && !target.is_square() {
        return invalid("trace-norm minimisation needs square matrices");
    }
    let m = basis.len();
    let t_norm = kind.eval(target);
    if m == 0 || t_norm == 0.0 {
        return Ok(AffineMin {
            interval: Interval::exact(t_norm),
            coeffs: vec![ZERO; m],
            point: target.clone(),
        });
    }
    let stacked = vectorize(basis);
    if rank(&stacked, 1e-10) < m {
        return invalid("affine basis is linearly dependent");
    }
    let problem = Problem::new(target, basis, &stacked, kind);
    Ok(problem.solve(t_norm, opts))
}

fn vectorize(basis: &[CMat]) -> CMat {
    let len = basis[0].rows() * basis[0].cols();
    let mut out = CMat::zeros(len, basis.len());
    for (s, b) in basis.iter().enumerate() {
        out.set_col(s, b.data());
    }
    out
}

struct Problem<'a> {
    target: &'a CMat,
    basis: &'a [CMat],
    kind: NormKind,
    /// Pseudoinverse of the vectorised basis, for projections.
    stacked: CMat,
    stacked_pinv: CMat,
}

struct Tracker {
    best_val: f64,
    best_z: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(target: &'a CMat, basis: &'a [CMat], stacked: &CMat, kind: NormKind) -> Self {
        Problem {
            target,
            basis,
            kind,
            stacked: stacked.clone(),
            stacked_pinv: pinv(stacked, 1e-13),
        }
    }

    fn point(&self, z: &[f64]) -> CMat {
        let mut a = self.target.clone();
        for (s, b) in self.basis.iter().enumerate() {
            a.axpy(C64::new(z[2 * s], z[2 * s + 1]), b);
        }
        a
    }

    /// Smoothed objective and its gradient in the real parametrisation.
    fn smoothed(&self, z: &[f64], mu: f64, tr: &mut Tracker) -> (f64, Vec<f64>, CMat) {
        let a = self.point(z);
        let d = svd(&a);
        let raw = match self.kind {
            NormKind::Spectral => d.s[0],
            NormKind::Trace => d.s.iter().sum(),
        };
        if raw < tr.best_val {
            tr.best_val = raw;
            tr.best_z = z.to_vec();
        }
        let (f, w): (f64, Vec<f64>) = match self.kind {
            NormKind::Spectral => {
                let smax = d.s[0];
                let e: Vec<f64> = d.s.iter().map(|s| ((s - smax) / mu).exp()).collect();
                let tot: f64 = e.iter().sum();
                (smax + mu * tot.ln(), e.iter().map(|x| x / tot).collect())
            }
            NormKind::Trace => {
                let f = d.s.iter().map(|s| (s * s + mu * mu).sqrt()).sum();
                (f, d.s.iter().map(|s| s / (s * s + mu * mu).sqrt()).collect())
            }
        };
        let g = weighted(&d.u, &w, &d.v);
        let grad = self.param_grad(&g);
        (f, grad, g)
    }

    fn param_grad(&self, g: &CMat) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.basis.len());
        for b in self.basis {
            let ip = g.inner(b);
            out.push(ip.re);
            out.push(-ip.im);
        }
        out
    }

    /// Dual bound from a candidate certificate `z`.
    fn certificate(&self, z: &CMat) -> f64 {
        let proj = self.project_out(z);
        let dn = self.kind.dual_eval(&proj);
        if dn <= 0.0 || !dn.is_finite() {
            return 0.0;
        }
        proj.inner(self.target).norm() / dn
    }

    fn project_out(&self, z: &CMat) -> CMat {
        // z - B (B^+ z) in vectorised form.
        let coeffs = self.stacked_pinv.mat_vec(z.data());
        let fit = self.stacked.mat_vec(&coeffs);
        let data: Vec<C64> = z.data().iter().zip(&fit).map(|(a, b)| a - b).collect();
        CMat::from_vec(z.rows(), z.cols(), data).expect("same shape")
    }

    /// Certificates built on the active singular subspace at `a`.
    fn cluster_certificates(&self, a: &CMat, scale: f64) -> f64 {
        let d = svd(a);
        let n = d.s.len();
        let mut best = 0.0f64;
        for &rel in &[1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2] {
            let delta = rel * scale;
            let cand = match self.kind {
                NormKind::Spectral => {
                    let r = d.s.iter().filter(|&&s| s >= d.s[0] - delta).count();
                    self.spectral_cluster(&d.u, &d.v, r)
                }
                NormKind::Trace => {
                    let r = d.s.iter().filter(|&&s| s > delta).count();
                    self.trace_cluster(&d.u, &d.v, r, n)
                }
            };
            if let Some(z) = cand {
                best = best.max(self.certificate(&z));
            }
        }
        best
    }

    /// `Z = U_r W V_r^*` with `W` the projection of `I/r` orthogonal to
    /// the compressed basis.
    fn spectral_cluster(&self, u: &CMat, v: &CMat, r: usize) -> Option<CMat> {
        let ur = u.block(0, 0, u.rows(), r);
        let vr = v.block(0, 0, v.rows(), r);
        let comp: Vec<CMat> = self
            .basis
            .iter()
            .map(|b| &(&ur.adjoint() * b) * &vr)
            .collect();
        let w0 = CMat::identity(r).scale_re(1.0 / r as f64);
        let w = project_out_of(&w0, &comp);
        Some(&(&ur * &w) * &vr.adjoint())
    }

    /// `Z = U_+ V_+^* + U_0 W V_0^*` with the least-norm `W` making `Z`
    /// orthogonal to the basis.
    fn trace_cluster(&self, u: &CMat, v: &CMat, r: usize, n: usize) -> Option<CMat> {
        let up = u.block(0, 0, n, r);
        let vp = v.block(0, 0, n, r);
        let z0 = &up * &vp.adjoint();
        if r == n {
            return Some(z0);
        }
        let u0 = u.block(0, r, n, n - r);
        let v0 = v.block(0, r, n, n - r);
        // <U0 W V0^*, B_s> = <W, U0^* B_s V0>
        let comp: Vec<CMat> = self
            .basis
            .iter()
            .map(|b| &(&u0.adjoint() * b) * &v0)
            .collect();
        let rhs: Vec<C64> = self.basis.iter().map(|b| -z0.inner(b)).collect();
        let k = n - r;
        // Solve <W, C_s> = rhs_s for least-norm W: W = sum a_s C_s.
        let mut gram = CMat::zeros(comp.len(), comp.len());
        for (i, ci) in comp.iter().enumerate() {
            for (j, cj) in comp.iter().enumerate() {
                gram[(i, j)] = cj.inner(ci);
            }
        }
        // <W, C_i> = sum_j conj(a_j) <C_j, C_i>; solve for conj(a).
        let ac = pinv(&gram, 1e-12).mat_vec(&rhs);
        let mut w = CMat::zeros(k, k);
        for (cj, a) in comp.iter().zip(&ac) {
            w.axpy(a.conj(), cj);
        }
        Some(&z0 + &(&(&u0 * &w) * &v0.adjoint()))
    }

    fn solve(&self, t_norm: f64, opts: &AffineOptions) -> AffineMin {
        let m = self.basis.len();
        let scale = t_norm;
        let mut tr = Tracker {
            best_val: f64::INFINITY,
            best_z: vec![0.0; 2 * m],
        };
        let mut lo = 0.0f64;

        // Frobenius least-squares start.
        let ls = self
            .stacked_pinv
            .mat_vec(&self.target.data().iter().map(|z| -z).collect::<Vec<_>>());
        let ls_z: Vec<f64> = ls.iter().flat_map(|c| [c.re, c.im]).collect();
        let zero = vec![0.0; 2 * m];

        for start in [ls_z, zero] {
            let mut z = start;
            for stage in 1..=opts.stages {
                let mu = scale * 10f64.powi(-(stage as i32));
                let mut fg = |x: &[f64]| {
                    let (f, g, _) = self.smoothed(x, mu, &mut tr);
                    (f, g)
                };
                z = lbfgs(&mut fg, z, opts.stage_iterations, 1e-14 * scale.max(1.0));
                let (_, _, grad_mat) = self.smoothed(&z, mu, &mut tr);
                lo = lo.max(self.certificate(&grad_mat));
                if tr.best_val - lo <= opts.gap_tol {
                    break;
                }
            }
            let best_point = self.point(&tr.best_z);
            lo = lo.max(self.cluster_certificates(&best_point, scale));
            if tr.best_val - lo <= opts.gap_tol {
                break;
            }
        }

        let hi = tr.best_val;
        let lo = lo.min(hi);
        let coeffs: Vec<C64> = (0..m)
            .map(|s| C64::new(tr.best_z[2 * s], tr.best_z[2 * s + 1]))
            .collect();
        AffineMin {
            interval: Interval::new(lo, hi),
            point: self.point(&tr.best_z),
            coeffs,
        }
    }
}

fn weighted(u: &CMat, w: &[f64], v: &CMat) -> CMat {
    let (m, n) = (u.rows(), v.rows());
    let mut g = CMat::zeros(m, n);
    for (k, &wk) in w.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        for i in 0..m {
            let a = u[(i, k)] * wk;
            if a == ZERO {
                continue;
            }
            for j in 0..n {
                g[(i, j)] += a * v[(j, k)].conj();
            }
        }
    }
    g
}

/// Frobenius projection of `w` onto the orthogonal complement of `span(dirs)`.
fn project_out_of(w: &CMat, dirs: &[CMat]) -> CMat {
    if dirs.is_empty() {
        return w.clone();
    }
    let st = vectorize(dirs);
    let coeffs = pinv(&st, 1e-12).mat_vec(w.data());
    let fit = st.mat_vec(&coeffs);
    let data: Vec<C64> = w.data().iter().zip(&fit).map(|(a, b)| a - b).collect();
    CMat::from_vec(w.rows(), w.cols(), data).expect("same shape")
}

/// Limited-memory BFGS with Armijo backtracking.
pub(crate) fn lbfgs(
    fg: &mut dyn FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    max_iter: usize,
    gtol: f64,
) -> Vec<f64> {
    const MEM: usize = 12;
    let n = x0.len();
    let mut x = x0;
    let (mut f, mut g) = fg(&x);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    for _ in 0..max_iter {
        let gnorm = dotr(&g, &g).sqrt();
        if gnorm <= gtol || !f.is_finite() {
            break;
        }
        // Two-loop recursion.
        let mut q = g.clone();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dotr(&y_hist[i], &s_hist[i]);
            alphas[i] = rho * dotr(&s_hist[i], &q);
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= alphas[i] * yj;
            }
        }
        let gamma = if k > 0 {
            dotr(&s_hist[k - 1], &y_hist[k - 1]) / dotr(&y_hist[k - 1], &y_hist[k - 1])
        } else {
            1.0 / gnorm.max(1e-300)
        };
        for qj in q.iter_mut() {
            *qj *= gamma;
        }
        for i in 0..k {
            let rho = 1.0 / dotr(&y_hist[i], &s_hist[i]);
            let beta = rho * dotr(&y_hist[i], &q);
            for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                *qj += (alphas[i] - beta) * sj;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dotr(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v / gnorm).collect();
            slope = dotr(&g, &dir);
            s_hist.clear();
            y_hist.clear();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fn_, gn) = fg(&xn);
            if fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dotr(&s, &y);
        let done = (f - fn_).abs() <= 1e-16 * f.abs().max(1e-300) && n > 0;
        x = xn;
        f = fn_;
        g = gn;
        if sy > 1e-300 {
            if s_hist.len() == MEM {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(y);
        }
        if done {
            break;
        }
    }
    x
}

fn dotr(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize, j: usize) -> CMat {
        CMat::unit(2, 2, i, j)
    }

    #[test]
    fn empty_basis_is_exact_norm() {
        let t = CMat::from_real(&[&[0.0, 2.0], &[0.0, 0.0]]);
        let iv = min_spectral_over_affine(&t, &[]).unwrap();
        assert!(iv.is_exact());
        assert_eq!(iv.lo, 2.0);
    }

    #[test]
    fn feasible_zero() {
        let b = vec![e(0, 0), e(1, 1)];
        let t = CMat::diag(&[C64::new(3.0, 1.0), C64::new(-2.0, 0.0)]);
        let iv = min_spectral_over_affine(&t, &b).unwrap();
        assert!(iv.hi <= 1e-8, "{iv:?}");
        assert!(iv.lo <= iv.hi);
    }

    #[test]
    fn dependent_basis_rejected() {
        let b = vec![e(0, 0), e(0, 0).scale_re(2.0)];
        assert!(min_spectral_over_affine(&e(1, 1), &b).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let b = vec![CMat::identity(3)];
        assert!(min_spectral_over_affine(&e(1, 1), &b).is_err());
    }

    #[test]
    fn diagonal_coset_gap_is_tight() {
        // inf_c ||diag(1,0) + c diag(-1,1)|| = 1/2 at c = 1/2.
        let t = e(0, 0);
        let b = vec![&e(1, 1) - &e(0, 0)];
        let iv = min_spectral_over_affine(&t, &b).unwrap();
        assert!((iv.lo - 0.5).abs() < 1e-8 && (iv.hi - 0.5).abs() < 1e-8, "{iv:?}");
        assert!(iv.width() <= 1e-8);
    }

    #[test]
    fn trace_norm_extension_of_diagonal_functional() {
        // Functional on span{e11, e22} with values (1, 1): least trace-norm
        // extension is the identity, norm 2.
        let t = CMat::identity(2);
        let b = vec![e(0, 1), e(1, 0)];
        let r = min_norm_over_affine(&t, &b, NormKind::Trace, &AffineOptions::default()).unwrap();
        assert!((r.interval.lo - 2.0).abs() < 1e-7, "{:?}", r.interval);
        assert!((r.interval.hi - 2.0).abs() < 1e-7, "{:?}", r.interval);
    }
}

#[cfg(test)]
mod random_tests {
    use super::*;
    use crate::rng::{gaussian_mat, seeded};

    #[test]
    fn random_instances_close_the_gap() {
        let mut rng = seeded(7);
        for trial in 0..20 {
            let n = 2 + trial % 4;
            let m = (1 + trial % 5).min(n * n - 1);
            let t = gaussian_mat(&mut rng, n, n);
            let b: Vec<CMat> = (0..m).map(|_| gaussian_mat(&mut rng, n, n)).collect();
            for kind in [NormKind::Spectral, NormKind::Trace] {
                let r = min_norm_over_affine(&t, &b, kind, &AffineOptions::default()).unwrap();
                assert!(r.interval.width() <= 1e-5, "{trial} {kind:?} {:?}", r.interval);
                assert!((kind.eval(&r.point) - r.interval.hi).abs() < 1e-12);
            }
        }
    }
}
