//! Subspaces of a matrix algebra `M_k`.

use serde::{Deserialize, Serialize};

use crate::element::LevelElement;
use crate::error::{invalid, shape, Result};
use crate::matrix::{CMat, C64, ZERO};
use crate::svd::{condition_number, rank};

/// Gram condition numbers above this are flagged.
pub const ILL_CONDITIONED: f64 = 1e8;

/// A linear map `X -> M_k` given by the images of the coordinate basis.
///
/// Its amplification sends `[x_ij]` to the `nk x nk` block matrix
/// `sum_ij E_ij (x) sum_s x_ijs B_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub ambient: usize,
    pub basis: Vec<CMat>,
}

impl Realization {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Image of a single coordinate vector.
    pub fn combine(&self, coords: &[C64]) -> CMat {
        let k = self.ambient;
        let mut out = CMat::zeros(k, k);
        for (c, b) in coords.iter().zip(&self.basis) {
            if *c != ZERO {
                out.axpy(*c, b);
            }
        }
        out
    }

    pub fn realize(&self, x: &LevelElement) -> CMat {
        let (n, k) = (x.level(), self.ambient);
        let mut out = CMat::zeros(n * k, n * k);
        for i in 0..n {
            for j in 0..n {
                let blk = self.combine(x.entry(i, j));
                out.set_block(i * k, j * k, &blk);
            }
        }
        out
    }

    /// Adjoint of [`realize`](Self::realize) against the trace pairing:
    /// returns `c_ijs = <G_ij, B_s>` where `G_ij` is the `(i, j)` block.
    pub fn pullback(&self, g: &CMat, n: usize) -> LevelElement {
        let k = self.ambient;
        let d = self.dim();
        let mut out = LevelElement::zeros(n, d);
        for i in 0..n {
            for j in 0..n {
                let dst = out.entry_mut(i, j);
                for (s, b) in self.basis.iter().enumerate() {
                    let mut acc = ZERO;
                    for p in 0..k {
                        for q in 0..k {
                            acc += g[(i * k + p, j * k + q)].conj() * b[(p, q)];
                        }
                    }
                    dst[s] = acc;
                }
            }
        }
        out
    }

    /// Basis of `M_n(X)` realised in `M_{nk}`, ordered like element data.
    pub fn amplified_basis(&self, n: usize) -> Vec<CMat> {
        let mut out = Vec::with_capacity(n * n * self.dim());
        for i in 0..n {
            for j in 0..n {
                for b in &self.basis {
                    let mut m = CMat::zeros(n * self.ambient, n * self.ambient);
                    m.set_block(i * self.ambient, j * self.ambient, b);
                    out.push(m);
                }
            }
        }
        out
    }

    pub fn block_diag(parts: &[Realization]) -> Realization {
        let k: usize = parts.iter().map(|p| p.ambient).sum();
        let mut basis = Vec::new();
        let mut off = 0;
        for p in parts {
            for b in &p.basis {
                let mut m = CMat::zeros(k, k);
                m.set_block(off, off, b);
                basis.push(m);
            }
            off += p.ambient;
        }
        Realization { ambient: k, basis }
    }

    /// `B_s (x) C_t` ordered `s * dim(right) + t`.
    pub fn kron(left: &Realization, right: &Realization) -> Realization {
        let mut basis = Vec::with_capacity(left.dim() * right.dim());
        for b in &left.basis {
            for c in &right.basis {
                basis.push(b.kron(c));
            }
        }
        Realization {
            ambient: left.ambient * right.ambient,
            basis,
        }
    }

    /// Vectorised basis as the columns of a `k^2 x d` matrix.
    pub fn stacked(&self) -> CMat {
        let k2 = self.ambient * self.ambient;
        let mut m = CMat::zeros(k2, self.dim());
        for (s, b) in self.basis.iter().enumerate() {
            m.set_col(s, b.data());
        }
        m
    }
}

/// A concrete operator space: the span of `d` independent `k x k` matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConcreteSpec")]
pub struct ConcreteOS {
    pub ambient: usize,
    pub basis: Vec<CMat>,
    /// Condition number of the vectorised basis.
    pub condition: f64,
    pub ill_conditioned: bool,
}

#[derive(Deserialize)]
struct ConcreteSpec {
    ambient: usize,
    basis: Vec<CMat>,
}

impl TryFrom<ConcreteSpec> for ConcreteOS {
    type Error = crate::error::OpError;

    fn try_from(s: ConcreteSpec) -> Result<Self> {
        ConcreteOS::new(s.ambient, s.basis)
    }
}

impl ConcreteOS {
    pub fn new(ambient: usize, basis: Vec<CMat>) -> Result<Self> {
        if ambient == 0 {
            return invalid("ambient dimension must be positive");
        }
        for (s, b) in basis.iter().enumerate() {
            if b.shape() != (ambient, ambient) {
                return shape(format!(
                    "basis matrix {s} is {}x{}, expected {ambient}x{ambient}",
                    b.rows(),
                    b.cols()
                ));
            }
            b.ensure_finite()?;
        }
        let r = Realization {
            ambient,
            basis: basis.clone(),
        };
        let (condition, ill) = if basis.is_empty() {
            (1.0, false)
        } else {
            let st = r.stacked();
            if rank(&st, 1e-12) < basis.len() {
                return invalid("basis matrices are linearly dependent");
            }
            let c = condition_number(&st);
            (c, c > ILL_CONDITIONED)
        };
        Ok(ConcreteOS {
            ambient,
            basis,
            condition,
            ill_conditioned: ill,
        })
    }

    pub fn realization(&self) -> Realization {
        Realization {
            ambient: self.ambient,
            basis: self.basis.clone(),
        }
    }
}
