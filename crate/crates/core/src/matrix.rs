//! Dense complex matrices.
//!
//! `CMat` is the numeric carrier for everything else in the crate: basis
//! matrices of concrete spaces, coefficient matrices of maps and the scalar
//! matrices that act on matrix levels. Storage is row-major.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, shape, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// `e_{ij}` in `rows x cols`.
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = CMat::zeros(rows, cols);
        m[(i, j)] = ONE;
        m
    }

    pub fn scalar(z: C64) -> Self {
        CMat {
            rows: 1,
            cols: 1,
            data: vec![z],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return shape(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            ));
        }
        Ok(CMat { rows, cols, data })
    }

    /// Real matrix from nested rows.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        CMat::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = CMat::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Column vector.
    pub fn column(values: &[C64]) -> Self {
        CMat {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            invalid("matrix has non-finite entries")
        }
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[C64]) {
        for (i, z) in v.iter().enumerate() {
            self[(i, j)] = *z;
        }
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, z: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * z).collect(),
        }
    }

    pub fn scale_re(&self, t: f64) -> CMat {
        self.scale(C64::new(t, 0.0))
    }

    /// `self += z * other`, shapes must agree.
    pub fn axpy(&mut self, z: C64, other: &CMat) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += z * b;
        }
    }

    pub fn matmul(&self, other: &CMat) -> Result<CMat> {
        if self.cols != other.rows {
            return shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &CMat) -> CMat {
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Kronecker product with the `(i,k),(j,l)` index convention:
    /// entry `((i*rb + k), (j*cb + l)) = a[i][j] * b[k][l]`.
    pub fn kron(&self, b: &CMat) -> CMat {
        let (ra, ca) = self.shape();
        let (rb, cb) = b.shape();
        let mut out = CMat::zeros(ra * rb, ca * cb);
        for i in 0..ra {
            for j in 0..ca {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..rb {
                    for l in 0..cb {
                        out[(i * rb + k, j * cb + l)] = a * b[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Block diagonal `diag(self, b)`.
    pub fn direct_sum(&self, b: &CMat) -> CMat {
        let mut out = CMat::zeros(self.rows + b.rows, self.cols + b.cols);
        out.set_block(0, 0, self);
        out.set_block(self.rows, self.cols, b);
        out
    }

    /// `alpha * x * beta`.
    pub fn sandwich(alpha: &CMat, x: &CMat, beta: &CMat) -> Result<CMat> {
        alpha.matmul(x)?.matmul(beta)
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn hstack(blocks: &[CMat]) -> Result<CMat> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return shape("hstack blocks have different row counts");
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = CMat::zeros(rows, cols);
        let mut c0 = 0;
        for b in blocks {
            out.set_block(0, c0, b);
            c0 += b.cols;
        }
        Ok(out)
    }

    pub fn vstack(blocks: &[CMat]) -> Result<CMat> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return shape("vstack blocks have different column counts");
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut out = CMat::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            out.set_block(r0, 0, b);
            r0 += b.rows;
        }
        Ok(out)
    }

    /// Frobenius inner product `Tr(self^* other)`.
    pub fn inner(&self, other: &CMat) -> C64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise distance, `inf` on shape mismatch.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        if self.shape() != other.shape() {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.shape(), rhs.shape(), "matrix add shape mismatch");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.shape(), rhs.shape(), "matrix sub shape mismatch");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale_re(-1.0)
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matrix mul shape mismatch");
        self.mul_unchecked(rhs)
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// JSON literal: array of rows, each row an array of `[re, im]` pairs.
impl Serialize for CMat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(D::Error::custom("ragged matrix literal"));
        }
        let data: Vec<C64> = rows
            .into_iter()
            .flatten()
            .map(|[re, im]| C64::new(re, im))
            .collect();
        let m = CMat { rows: r, cols: c, data };
        if !m.is_finite() {
            return Err(D::Error::custom("matrix literal has non-finite entries"));
        }
        Ok(m)
    }
}

/// Complex vector helpers shared by the solvers.
pub(crate) mod vecops {
    use super::C64;

    pub fn dot(a: &[C64], b: &[C64]) -> C64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    pub fn norm(a: &[C64]) -> f64 {
        a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(a: &mut [C64], t: C64) {
        for z in a {
            *z *= t;
        }
    }

    pub fn axpy(y: &mut [C64], t: C64, x: &[C64]) {
        for (a, b) in y.iter_mut().zip(x) {
            *a += t * b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_identities_give_identity() {
        assert_eq!(CMat::identity(2).kron(&CMat::identity(2)), CMat::identity(4));
    }

    #[test]
    fn kron_with_scalar_block() {
        let a = CMat::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = CMat::scalar(C64::new(2.0, 0.0));
        assert_eq!(a.kron(&b), CMat::from_real(&[&[0.0, 2.0], &[0.0, 0.0]]));
    }

    #[test]
    fn kron_index_convention() {
        let a = CMat::from_real(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = CMat::from_real(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let k = a.kron(&b);
        // ((i,k),(j,l)) = a_ij b_kl
        assert_eq!(k[(1 * 2 + 0, 0 * 2 + 1)], C64::new(3.0 * 6.0, 0.0));
    }

    #[test]
    fn direct_sum_of_units() {
        let one = CMat::identity(1);
        assert_eq!(one.direct_sum(&one), CMat::identity(2));
    }

    #[test]
    fn sandwich_checks_dimensions() {
        let a = CMat::identity(2);
        let x = CMat::zeros(3, 3);
        assert!(CMat::sandwich(&a, &x, &a).is_err());
    }

    #[test]
    fn sandwich_scalar_action() {
        let x = CMat::from_real(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let two = CMat::identity(2).scale_re(2.0);
        let got = CMat::sandwich(&two, &x, &CMat::identity(2)).unwrap();
        assert!(got.max_abs_diff(&x.scale_re(2.0)) < 1e-15);
        let id = CMat::sandwich(&CMat::identity(2), &x, &CMat::identity(2)).unwrap();
        assert_eq!(id, x);
    }

    #[test]
    fn json_literal_roundtrip() {
        let m = CMat::from_fn(2, 3, |i, j| C64::new(i as f64, j as f64 - 1.0));
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.starts_with("[[[0.0,-1.0]"));
        let back: CMat = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn json_literal_rejects_ragged() {
        assert!(serde_json::from_str::<CMat>("[[[1,0]],[[1,0],[2,0]]]").is_err());
    }
}
