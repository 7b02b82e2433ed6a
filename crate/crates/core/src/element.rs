//! Elements of `M_n(X)` stored as coordinate grids.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{shape, Result};
use crate::matrix::{CMat, C64, ZERO};

/// An `n x n` grid of coordinate vectors of length `d`.
///
/// Entry `(i, j)` coordinate `s` lives at `(i * n + j) * d + s`.
#[derive(Clone, PartialEq)]
pub struct LevelElement {
    n: usize,
    d: usize,
    data: Vec<C64>,
}

impl LevelElement {
    pub fn zeros(n: usize, d: usize) -> Self {
        LevelElement {
            n,
            d,
            data: vec![ZERO; n * n * d],
        }
    }

    pub fn new(n: usize, d: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n * d {
            return shape(format!(
                "level-{n} element over a {d}-dimensional space needs {} coordinates, got {}",
                n * n * d,
                data.len()
            ));
        }
        Ok(LevelElement { n, d, data })
    }

    pub fn from_fn(n: usize, d: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n * d);
        for i in 0..n {
            for j in 0..n {
                for s in 0..d {
                    data.push(f(i, j, s));
                }
            }
        }
        LevelElement { n, d, data }
    }

    /// Level-1 element with the given coordinates.
    pub fn vector(coords: &[C64]) -> Self {
        LevelElement {
            n: 1,
            d: coords.len(),
            data: coords.to_vec(),
        }
    }

    /// `[a_ij * v]` for a scalar matrix `a` and a fixed vector `v`.
    pub fn scalar_times(a: &CMat, v: &[C64]) -> Self {
        let n = a.rows();
        LevelElement::from_fn(n, v.len(), |i, j, s| a[(i, j)] * v[s])
    }

    /// Grid whose `(i, j)` entry is the `s`-th coordinate matrix entry: the
    /// element `sum_s mats[s] (x) e_s`.
    pub fn from_coordinate_matrices(mats: &[CMat]) -> Result<Self> {
        let d = mats.len();
        let n = mats.first().map_or(0, |m| m.rows());
        for m in mats {
            if m.shape() != (n, n) {
                return shape("coordinate matrices must all be n x n");
            }
        }
        Ok(LevelElement::from_fn(n, d, |i, j, s| mats[s][(i, j)]))
    }

    pub fn level(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn entry(&self, i: usize, j: usize) -> &[C64] {
        let o = (i * self.n + j) * self.d;
        &self.data[o..o + self.d]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut [C64] {
        let o = (i * self.n + j) * self.d;
        &mut self.data[o..o + self.d]
    }

    /// The scalar matrix `[x_ij,s]` of one coordinate.
    pub fn coordinate_matrix(&self, s: usize) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| self.entry(i, j)[s])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &LevelElement) -> f64 {
        if self.n != other.n || self.d != other.d {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, z: C64) -> Self {
        LevelElement {
            n: self.n,
            d: self.d,
            data: self.data.iter().map(|x| x * z).collect(),
        }
    }

    pub fn scale_re(&self, t: f64) -> Self {
        self.scale(C64::new(t, 0.0))
    }

    pub fn add(&self, other: &LevelElement) -> Result<Self> {
        self.check_same(other)?;
        Ok(LevelElement {
            n: self.n,
            d: self.d,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &LevelElement) -> Result<Self> {
        self.add(&other.scale_re(-1.0))
    }

    fn check_same(&self, other: &LevelElement) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return shape(format!(
                "elements differ: level {} dim {} vs level {} dim {}",
                self.n, self.d, other.n, other.d
            ));
        }
        Ok(())
    }

    /// `x (+) y` in `M_{n+m}(X)`.
    pub fn direct_sum(&self, other: &LevelElement) -> Result<Self> {
        if self.d != other.d {
            return shape("direct sum of elements over different spaces");
        }
        let (n, m, d) = (self.n, other.n, self.d);
        let mut out = LevelElement::zeros(n + m, d);
        for i in 0..n {
            for j in 0..n {
                out.entry_mut(i, j).copy_from_slice(self.entry(i, j));
            }
        }
        for i in 0..m {
            for j in 0..m {
                out.entry_mut(n + i, n + j).copy_from_slice(other.entry(i, j));
            }
        }
        Ok(out)
    }

    /// `alpha x beta` for scalar matrices `alpha` (m x n) and `beta` (n x m).
    pub fn compress(&self, alpha: &CMat, beta: &CMat) -> Result<Self> {
        let n = self.n;
        if alpha.cols() != n || beta.rows() != n || alpha.rows() != beta.cols() {
            return shape(format!(
                "cannot form alpha x beta with alpha {}x{}, x level {n}, beta {}x{}",
                alpha.rows(),
                alpha.cols(),
                beta.rows(),
                beta.cols()
            ));
        }
        let m = alpha.rows();
        let d = self.d;
        // tmp = x beta (n x m grid)
        let mut tmp = vec![ZERO; n * m * d];
        for i in 0..n {
            for l in 0..n {
                let xe = self.entry(i, l);
                for j in 0..m {
                    let b = beta[(l, j)];
                    if b == ZERO {
                        continue;
                    }
                    let o = (i * m + j) * d;
                    for s in 0..d {
                        tmp[o + s] += xe[s] * b;
                    }
                }
            }
        }
        let mut out = LevelElement::zeros(m, d);
        for i in 0..m {
            for k in 0..n {
                let a = alpha[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..m {
                    let o = (k * m + j) * d;
                    let dst = out.entry_mut(i, j);
                    for s in 0..d {
                        dst[s] += a * tmp[o + s];
                    }
                }
            }
        }
        Ok(out)
    }

    /// The principal sub-grid on the given row/column indices.
    pub fn corner(&self, keep: &[usize]) -> Self {
        let m = keep.len();
        let mut out = LevelElement::zeros(m, self.d);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                out.entry_mut(a, b).copy_from_slice(self.entry(i, j));
            }
        }
        out
    }

    /// Applies a coefficient matrix (`d' x d`) to every entry.
    pub fn map_coords(&self, coeff: &CMat) -> Result<Self> {
        if coeff.cols() != self.d {
            return shape(format!(
                "coefficient matrix has {} columns, element has dimension {}",
                coeff.cols(),
                self.d
            ));
        }
        let d2 = coeff.rows();
        let mut out = LevelElement::zeros(self.n, d2);
        for i in 0..self.n {
            for j in 0..self.n {
                let v = coeff.mat_vec(self.entry(i, j));
                out.entry_mut(i, j).copy_from_slice(&v);
            }
        }
        Ok(out)
    }

    /// Block-splits the coordinates into consecutive ranges of the given sizes.
    pub fn split(&self, dims: &[usize]) -> Result<Vec<LevelElement>> {
        if dims.iter().sum::<usize>() != self.d {
            return shape("block dimensions do not add up to the element dimension");
        }
        let mut out = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &dk in dims {
            out.push(LevelElement::from_fn(self.n, dk, |i, j, s| {
                self.entry(i, j)[off + s]
            }));
            off += dk;
        }
        Ok(out)
    }

    /// Inverse of [`split`](Self::split).
    pub fn concat(parts: &[LevelElement]) -> Result<Self> {
        let n = parts.first().map_or(1, |p| p.n);
        if parts.iter().any(|p| p.n != n) {
            return shape("parts have different levels");
        }
        let d: usize = parts.iter().map(|p| p.d).sum();
        let mut out = LevelElement::zeros(n, d);
        for i in 0..n {
            for j in 0..n {
                let dst = out.entry_mut(i, j);
                let mut off = 0;
                for p in parts {
                    dst[off..off + p.d].copy_from_slice(p.entry(i, j));
                    off += p.d;
                }
            }
        }
        Ok(out)
    }

    /// `M_m(M_n(X))` flattened to `M_{mn}(X)`: entry `((a,i),(b,j))`.
    pub fn flatten(outer: usize, inner: &[LevelElement]) -> Result<Self> {
        if inner.len() != outer * outer {
            return shape("flatten needs outer^2 inner blocks");
        }
        let n = inner.first().map_or(0, |e| e.n);
        let d = inner.first().map_or(0, |e| e.d);
        let mut out = LevelElement::zeros(outer * n, d);
        for a in 0..outer {
            for b in 0..outer {
                let blk = &inner[a * outer + b];
                for i in 0..n {
                    for j in 0..n {
                        out.entry_mut(a * n + i, b * n + j)
                            .copy_from_slice(blk.entry(i, j));
                    }
                }
            }
        }
        Ok(out)
    }
}

impl std::fmt::Debug for LevelElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LevelElement(n={}, d={}, {:?})", self.n, self.d, self.data)
    }
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    level: usize,
    coords: Vec<Vec<Vec<[f64; 2]>>>,
}

/// JSON: `{"level": n, "coords": n x n x d array of [re, im]}`.
impl Serialize for LevelElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let coords = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.entry(i, j).iter().map(|z| [z.re, z.im]).collect())
                    .collect()
            })
            .collect();
        ElementJson {
            level: self.n,
            coords,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LevelElement {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let j = ElementJson::deserialize(de)?;
        let n = j.level;
        if n == 0 {
            return Err(D::Error::custom("level must be at least 1"));
        }
        if j.coords.len() != n || j.coords.iter().any(|row| row.len() != n) {
            return Err(D::Error::custom(format!("coords must be a {n} x {n} grid")));
        }
        let d = j.coords[0][0].len();
        let mut data = Vec::with_capacity(n * n * d);
        for row in &j.coords {
            for cell in row {
                if cell.len() != d {
                    return Err(D::Error::custom("coordinate vectors differ in length"));
                }
                for &[re, im] in cell {
                    if !re.is_finite() || !im.is_finite() {
                        return Err(D::Error::custom("non-finite coordinate"));
                    }
                    data.push(C64::new(re, im));
                }
            }
        }
        Ok(LevelElement { n, d, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn layout_and_coordinate_matrix() {
        let e = LevelElement::from_fn(2, 3, |i, j, s| c((100 * i + 10 * j + s) as f64));
        assert_eq!(e.entry(1, 0), &[c(100.0), c(101.0), c(102.0)]);
        assert_eq!(e.coordinate_matrix(2)[(0, 1)], c(12.0));
    }

    #[test]
    fn compress_with_identity_is_noop() {
        let e = LevelElement::from_fn(3, 2, |i, j, s| C64::new(i as f64, (j + s) as f64));
        let id = CMat::identity(3);
        assert_eq!(e.compress(&id, &id).unwrap(), e);
    }

    #[test]
    fn compress_matches_coordinatewise_products() {
        let e = LevelElement::from_fn(2, 2, |i, j, s| C64::new((i + 2 * j) as f64, s as f64));
        let a = CMat::from_real(&[&[1.0, 2.0], &[0.0, -1.0], &[3.0, 1.0]]);
        let b = CMat::from_real(&[&[0.5, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let out = e.compress(&a, &b).unwrap();
        for s in 0..2 {
            let want = &(&a * &e.coordinate_matrix(s)) * &b;
            assert!(out.coordinate_matrix(s).max_abs_diff(&want) < 1e-14);
        }
    }

    #[test]
    fn split_concat_roundtrip() {
        let e = LevelElement::from_fn(2, 5, |i, j, s| c((i * 7 + j * 3 + s) as f64));
        let parts = e.split(&[2, 3]).unwrap();
        assert_eq!(LevelElement::concat(&parts).unwrap(), e);
    }

    #[test]
    fn json_roundtrip() {
        let e = LevelElement::from_fn(2, 1, |i, j, _| C64::new(i as f64, j as f64));
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"level":2,"coords":[[[[0.0,0.0]],[[0.0,1.0]]],[[[1.0,0.0]],[[1.0,1.0]]]]}"#);
        let back: LevelElement = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn json_rejects_bad_grid() {
        assert!(serde_json::from_str::<LevelElement>(r#"{"level":2,"coords":[[[[1,0]]]]}"#).is_err());
    }
}
