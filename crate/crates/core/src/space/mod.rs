//! Operator spaces presented by a coordinate dimension and a norm on every
//! matrix level.
//!
//! Concrete spaces (subspaces of `M_k`) have exact norms. Every other kind is
//! built from concrete pieces and returns certified intervals.

mod concrete;
mod norms;
pub mod ruan;

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use concrete::{ConcreteOS, Realization, ILL_CONDITIONED};
pub use ruan::{check_ruan, RuanReport};
pub(crate) use norms::{functional_norm, quotient_affine};

use crate::config::Search;
use crate::element::LevelElement;
use crate::error::{invalid, shape, OpError, Result};
use crate::interval::Interval;
use crate::matrix::{CMat, C64};
use crate::svd::{null_space, range_basis};

/// A user-supplied norm on every level, for spaces with no matrix model.
pub trait NormOracle: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn level_norm(&self, x: &LevelElement) -> Interval;
    /// Upper bound for the norm of the `s`-th coordinate functional.
    fn coordinate_bound(&self, _s: usize) -> Option<f64> {
        None
    }
}

/// How a space was built. This is also its JSON form.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Structure {
    Zero,
    Concrete(ConcreteOS),
    Product {
        parts: Vec<OSpace>,
    },
    Coproduct {
        parts: Vec<OSpace>,
        #[serde(default)]
        search: Search,
    },
    Subspace {
        parent: OSpace,
        /// Columns are the parent coordinates of the subspace basis.
        embed: CMat,
    },
    Quotient {
        parent: OSpace,
        /// Orthonormal coordinate basis of the subspace divided out.
        kernel: CMat,
        /// Orthonormal basis of its orthogonal complement; quotient
        /// coordinates are taken against these columns.
        complement: CMat,
    },
    Dual {
        parent: OSpace,
        #[serde(default)]
        search: Search,
    },
    TraceClass {
        n: usize,
        #[serde(default)]
        search: Search,
    },
    Tensor {
        left: OSpace,
        right: OSpace,
        #[serde(default)]
        search: Search,
    },
    Min {
        parent: OSpace,
        #[serde(default)]
        search: Search,
    },
    #[serde(skip)]
    Oracle(Arc<dyn NormOracle>),
}

struct Node {
    structure: Structure,
    dim: usize,
    kappa: OnceLock<Vec<f64>>,
}

/// An operator space. Cheap to clone; immutable once built.
#[derive(Clone)]
pub struct OSpace(Arc<Node>);

impl OSpace {
    pub(crate) fn from_structure(structure: Structure) -> OSpace {
        let dim = structure_dim(&structure);
        OSpace(Arc::new(Node {
            structure,
            dim,
            kappa: OnceLock::new(),
        }))
    }

    pub fn zero() -> OSpace {
        OSpace::from_structure(Structure::Zero)
    }

    /// The span of `basis` inside `M_ambient`.
    pub fn concrete(ambient: usize, basis: Vec<CMat>) -> Result<OSpace> {
        Ok(OSpace::from_structure(Structure::Concrete(ConcreteOS::new(
            ambient, basis,
        )?)))
    }

    /// The complex numbers with their unique operator space structure.
    pub fn scalars() -> OSpace {
        OSpace::concrete(1, vec![CMat::identity(1)]).expect("valid")
    }

    /// `M_k` with the matrix units `e_ij` as basis, ordered row-major.
    pub fn matrix_algebra(k: usize) -> OSpace {
        let basis = (0..k * k).map(|t| CMat::unit(k, k, t / k, t % k)).collect();
        OSpace::concrete(k, basis).expect("matrix units are independent")
    }

    /// The diagonal of `M_k`, i.e. `l_inf^k`.
    pub fn diagonal(k: usize) -> OSpace {
        let basis = (0..k).map(|t| CMat::unit(k, k, t, t)).collect();
        OSpace::concrete(k, basis).expect("diagonal units are independent")
    }

    pub fn from_oracle(oracle: Arc<dyn NormOracle>) -> OSpace {
        OSpace::from_structure(Structure::Oracle(oracle))
    }

    /// Product of operator spaces with the sup norm on each level.
    pub fn product(parts: Vec<OSpace>) -> OSpace {
        if parts.is_empty() {
            return OSpace::zero();
        }
        OSpace::from_structure(Structure::Product { parts })
    }

    /// The l^1 coproduct. Components need a matrix model.
    pub fn coproduct(parts: Vec<OSpace>, search: Search) -> Result<OSpace> {
        if parts.is_empty() {
            return Ok(OSpace::zero());
        }
        if let Some(p) = parts.iter().find(|p| p.cc_form().is_none()) {
            return Err(OpError::Unsupported(format!(
                "coproduct component of kind {} has no matrix model",
                p.kind()
            )));
        }
        Ok(OSpace::from_structure(Structure::Coproduct { parts, search }))
    }

    /// The dual space, coordinates taken against the dual basis.
    pub fn dual(&self, search: Search) -> OSpace {
        if self.dim() == 0 {
            return OSpace::zero();
        }
        OSpace::from_structure(Structure::Dual {
            parent: self.clone(),
            search,
        })
    }

    /// `T_n`: `n x n` matrices with the operator space structure of the
    /// dual of `M_n` under the pairing `sum a_ij b_ij`. Coordinates are
    /// row-major.
    pub fn trace_class(n: usize, search: Search) -> Result<OSpace> {
        if n == 0 {
            return invalid("trace class needs n >= 1");
        }
        Ok(OSpace::from_structure(Structure::TraceClass { n, search }))
    }

    /// The smallest operator space structure with the same level-1 norm.
    pub fn min_quantization(&self, search: Search) -> OSpace {
        if self.dim() == 0 {
            return OSpace::zero();
        }
        OSpace::from_structure(Structure::Min {
            parent: self.clone(),
            search,
        })
    }

    /// The projective tensor product. Coordinate `s * dim(right) + t`
    /// corresponds to `b_s (x) c_t`.
    pub fn tensor(left: &OSpace, right: &OSpace, search: Search) -> OSpace {
        if left.dim() == 0 || right.dim() == 0 {
            return OSpace::zero();
        }
        OSpace::from_structure(Structure::Tensor {
            left: left.clone(),
            right: right.clone(),
            search,
        })
    }

    /// The subspace spanned by the given coordinate vectors (columns).
    ///
    /// Concrete parents give a concrete space whose inclusion is a complete
    /// isometry by construction.
    pub fn subspace(&self, vectors: &CMat) -> Result<OSpace> {
        if vectors.rows() != self.dim() {
            return shape(format!(
                "subspace vectors have length {}, space has dimension {}",
                vectors.rows(),
                self.dim()
            ));
        }
        vectors.ensure_finite()?;
        let r = vectors.cols();
        if r > 0 && crate::svd::rank(vectors, 1e-12) < r {
            return invalid("subspace vectors are linearly dependent");
        }
        if r == 0 {
            return Ok(OSpace::zero());
        }
        if let Structure::Concrete(c) = self.structure() {
            let basis = (0..r)
                .map(|t| c.realization().combine(&vectors.col(t)))
                .collect();
            return OSpace::concrete(c.ambient, basis);
        }
        Ok(OSpace::from_structure(Structure::Subspace {
            parent: self.clone(),
            embed: vectors.clone(),
        }))
    }

    /// Quotient by the span of the given coordinate vectors (columns).
    ///
    /// Quotient coordinates are taken against an orthonormal basis of the
    /// orthogonal complement of the kernel.
    pub fn quotient(&self, kernel_vectors: &CMat) -> Result<OSpace> {
        let d = self.dim();
        if kernel_vectors.rows() != d {
            return invalid(format!(
                "kernel vectors have length {}, space has dimension {d}",
                kernel_vectors.rows()
            ));
        }
        kernel_vectors.ensure_finite()?;
        let kernel = if kernel_vectors.cols() == 0 {
            CMat::zeros(d, 0)
        } else {
            range_basis(kernel_vectors, 1e-12)
        };
        if kernel.cols() == d {
            return Ok(OSpace::zero());
        }
        let complement = if kernel.cols() == 0 {
            CMat::identity(d)
        } else {
            null_space(&kernel.adjoint(), 1e-12)
        };
        // Nested quotients collapse onto the original parent.
        if let Structure::Quotient {
            parent,
            kernel: k0,
            complement: q0,
        } = self.structure()
        {
            let lifted = q0 * &kernel;
            let all = CMat::hstack(&[k0.clone(), lifted])?;
            return parent.quotient(&all);
        }
        if self.concrete_form().is_none() {
            return Err(OpError::Unsupported(format!(
                "quotients of {} spaces are not supported",
                self.kind()
            )));
        }
        Ok(OSpace::from_structure(Structure::Quotient {
            parent: self.clone(),
            kernel,
            complement,
        }))
    }

    pub fn structure(&self) -> &Structure {
        &self.0.structure
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn kind(&self) -> &'static str {
        match self.structure() {
            Structure::Zero => "zero",
            Structure::Concrete(_) => "concrete",
            Structure::Product { .. } => "product",
            Structure::Coproduct { .. } => "coproduct",
            Structure::Subspace { .. } => "subspace",
            Structure::Quotient { .. } => "quotient",
            Structure::Dual { .. } => "dual",
            Structure::TraceClass { .. } => "trace_class",
            Structure::Tensor { .. } => "tensor",
            Structure::Min { .. } => "min",
            Structure::Oracle(_) => "oracle",
        }
    }

    pub fn as_concrete(&self) -> Option<&ConcreteOS> {
        match self.structure() {
            Structure::Concrete(c) => Some(c),
            _ => None,
        }
    }

    /// Whether two handles describe the same space.
    pub fn same_as(&self, other: &OSpace) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.dim() != other.dim() {
            return false;
        }
        match (serde_json::to_string(self), serde_json::to_string(other)) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        }
    }

    /// A completely isometric embedding into some `M_k`, when one is known.
    pub fn concrete_form(&self) -> Option<Realization> {
        match self.structure() {
            Structure::Concrete(c) => Some(c.realization()),
            Structure::Product { parts } => {
                let forms: Option<Vec<_>> = parts.iter().map(|p| p.concrete_form()).collect();
                Some(Realization::block_diag(&forms?))
            }
            Structure::Subspace { parent, embed } => {
                let f = parent.concrete_form()?;
                let basis = (0..embed.cols()).map(|t| f.combine(&embed.col(t))).collect();
                Some(Realization {
                    ambient: f.ambient,
                    basis,
                })
            }
            _ => None,
        }
    }

    /// A complete contraction into some `M_k`: isometric for concrete
    /// models, otherwise the canonical contractive model of the kind.
    pub fn cc_form(&self) -> Option<Realization> {
        if let Some(f) = self.concrete_form() {
            return Some(f);
        }
        match self.structure() {
            Structure::Coproduct { parts, .. } | Structure::Product { parts } => {
                let forms: Option<Vec<_>> = parts.iter().map(|p| p.cc_form()).collect();
                Some(Realization::block_diag(&forms?))
            }
            Structure::Tensor { left, right, .. } => {
                Some(Realization::kron(&left.cc_form()?, &right.cc_form()?))
            }
            Structure::TraceClass { n, .. } => {
                // t -> t^T is a complete contraction T_n -> M_n.
                let n = *n;
                let basis = (0..n * n).map(|t| CMat::unit(n, n, t % n, t / n)).collect();
                Some(Realization { ambient: n, basis })
            }
            Structure::Subspace { parent, embed } => {
                let f = parent.cc_form()?;
                let basis = (0..embed.cols()).map(|t| f.combine(&embed.col(t))).collect();
                Some(Realization {
                    ambient: f.ambient,
                    basis,
                })
            }
            _ => None,
        }
    }

    /// Norm of an element of `M_n(X)`.
    pub fn level_norm(&self, x: &LevelElement) -> Result<Interval> {
        self.check_element(x)?;
        Ok(self.norm(x))
    }

    pub(crate) fn check_element(&self, x: &LevelElement) -> Result<()> {
        if x.level() == 0 {
            return invalid("level must be at least 1");
        }
        if x.dim() != self.dim() {
            return shape(format!(
                "element has {} coordinates per entry, space has dimension {}",
                x.dim(),
                self.dim()
            ));
        }
        if !x.is_finite() {
            return invalid("element has non-finite coordinates");
        }
        Ok(())
    }

    /// Norm without argument checks.
    pub(crate) fn norm(&self, x: &LevelElement) -> Interval {
        if x.is_zero() {
            return Interval::ZERO;
        }
        norms::level_norm(self, x)
    }

    /// Upper bound only, skipping costly lower-bound searches.
    pub(crate) fn norm_hi(&self, x: &LevelElement) -> f64 {
        if x.is_zero() {
            return 0.0;
        }
        norms::upper(self, x)
    }

    /// Upper bounds `kappa_s` on the norms of the coordinate functionals.
    pub fn coordinate_bounds(&self) -> &[f64] {
        self.0.kappa.get_or_init(|| norms::coordinate_bounds(self))
    }

    /// Parses a space description and validates it.
    pub fn from_json(s: &str) -> Result<OSpace> {
        serde_json::from_str(s).map_err(|e| OpError::Parse(e.to_string()))
    }
}

fn structure_dim(s: &Structure) -> usize {
    match s {
        Structure::Zero => 0,
        Structure::Concrete(c) => c.basis.len(),
        Structure::Product { parts } | Structure::Coproduct { parts, .. } => {
            parts.iter().map(|p| p.dim()).sum()
        }
        Structure::Subspace { embed, .. } => embed.cols(),
        Structure::Quotient { complement, .. } => complement.cols(),
        Structure::Dual { parent, .. } | Structure::Min { parent, .. } => parent.dim(),
        Structure::TraceClass { n, .. } => n * n,
        Structure::Tensor { left, right, .. } => left.dim() * right.dim(),
        Structure::Oracle(o) => o.dim(),
    }
}

fn validate(s: &Structure) -> Result<()> {
    match s {
        Structure::Subspace { parent, embed } => {
            if embed.rows() != parent.dim() {
                return shape("subspace embedding does not match the parent dimension");
            }
        }
        Structure::Quotient {
            parent,
            kernel,
            complement,
        } => {
            let d = parent.dim();
            if kernel.rows() != d || complement.rows() != d || kernel.cols() + complement.cols() != d
            {
                return shape("quotient kernel and complement do not split the parent");
            }
            if parent.concrete_form().is_none() {
                return Err(OpError::Unsupported("quotient of a non-concrete space".into()));
            }
        }
        Structure::TraceClass { n, .. } if *n == 0 => {
            return invalid("trace class needs n >= 1");
        }
        Structure::Coproduct { parts, .. } => {
            if parts.iter().any(|p| p.cc_form().is_none()) {
                return Err(OpError::Unsupported(
                    "coproduct components need a matrix model".into(),
                ));
            }
        }
        _ => {}
    }
    Ok(())
}

impl Serialize for OSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.structure().serialize(s)
    }
}

impl<'de> Deserialize<'de> for OSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = Structure::deserialize(d)?;
        validate(&s).map_err(D::Error::custom)?;
        Ok(OSpace::from_structure(s))
    }
}

impl fmt::Debug for OSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.structure() {
            Structure::Oracle(o) => write!(f, "OSpace(oracle {}, dim {})", o.name(), self.dim()),
            _ => write!(f, "OSpace({}, dim {})", self.kind(), self.dim()),
        }
    }
}

/// Convenience: level-1 element of a space from real coordinates.
pub fn coords(values: &[f64]) -> LevelElement {
    LevelElement::vector(&values.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>())
}
