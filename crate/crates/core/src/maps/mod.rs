//! Linear maps between operator spaces, their amplifications and norms.

mod bounds;
mod search;
mod verdict;

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use verdict::{
    is_complete_contraction, is_complete_isometry, is_complete_quotient, Verdict, Witness,
};

use crate::config::Budget;
use crate::element::LevelElement;
use crate::error::{shape, OpError, Result};
use crate::interval::Interval;
use crate::matrix::{CMat, C64};
use crate::space::OSpace;
use crate::svd::rank;

/// A linear map acting on coordinates: `u(x) = coeff * x`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "MapSpec")]
pub struct OSMap {
    dom: OSpace,
    cod: OSpace,
    coeff: CMat,
    #[serde(skip)]
    cb_hi: Arc<OnceLock<f64>>,
}

#[derive(Deserialize)]
struct MapSpec {
    dom: OSpace,
    cod: OSpace,
    coeff: CMat,
}

impl TryFrom<MapSpec> for OSMap {
    type Error = OpError;

    fn try_from(m: MapSpec) -> Result<Self> {
        OSMap::new(m.dom, m.cod, m.coeff)
    }
}

impl std::fmt::Debug for OSMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OSMap({:?} -> {:?}, {:?})", self.dom, self.cod, self.coeff)
    }
}

impl OSMap {
    pub fn new(dom: OSpace, cod: OSpace, coeff: CMat) -> Result<OSMap> {
        if coeff.shape() != (cod.dim(), dom.dim()) {
            return shape(format!(
                "coefficient matrix is {}x{}, expected {}x{}",
                coeff.rows(),
                coeff.cols(),
                cod.dim(),
                dom.dim()
            ));
        }
        coeff.ensure_finite()?;
        Ok(OSMap {
            dom,
            cod,
            coeff,
            cb_hi: Arc::new(OnceLock::new()),
        })
    }

    pub fn identity(x: &OSpace) -> OSMap {
        OSMap::new(x.clone(), x.clone(), CMat::identity(x.dim())).expect("square")
    }

    pub fn zero(dom: &OSpace, cod: &OSpace) -> OSMap {
        OSMap::new(dom.clone(), cod.clone(), CMat::zeros(cod.dim(), dom.dim())).expect("sized")
    }

    pub fn dom(&self) -> &OSpace {
        &self.dom
    }

    pub fn cod(&self) -> &OSpace {
        &self.cod
    }

    pub fn coeff(&self) -> &CMat {
        &self.coeff
    }

    pub fn scaled(&self, z: C64) -> OSMap {
        OSMap::new(self.dom.clone(), self.cod.clone(), self.coeff.scale(z)).expect("same shape")
    }

    /// `self - other` for parallel maps.
    pub fn difference(&self, other: &OSMap) -> Result<OSMap> {
        if self.coeff.shape() != other.coeff.shape() {
            return shape("maps are not parallel");
        }
        OSMap::new(self.dom.clone(), self.cod.clone(), &self.coeff - &other.coeff)
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &OSMap) -> Result<OSMap> {
        if inner.cod.dim() != self.dom.dim() {
            return shape(format!(
                "cannot compose: inner map lands in dimension {}, outer starts in {}",
                inner.cod.dim(),
                self.dom.dim()
            ));
        }
        OSMap::new(inner.dom.clone(), self.cod.clone(), self.coeff.matmul(&inner.coeff)?)
    }

    /// Same coefficients with a different codomain of equal dimension.
    pub fn with_cod(&self, cod: &OSpace) -> Result<OSMap> {
        OSMap::new(self.dom.clone(), cod.clone(), self.coeff.clone())
    }

    /// Same coefficients with a different domain of equal dimension.
    pub fn with_dom(&self, dom: &OSpace) -> Result<OSMap> {
        OSMap::new(dom.clone(), self.cod.clone(), self.coeff.clone())
    }

    /// The amplification `u_n`: `coeff` applied to every entry.
    pub fn apply(&self, x: &LevelElement) -> Result<LevelElement> {
        self.dom.check_element(x)?;
        x.map_coords(&self.coeff)
    }

    /// `u_n` as a procedure on level-`n` elements.
    pub fn amplify(&self, n: usize) -> impl Fn(&LevelElement) -> Result<LevelElement> + '_ {
        move |x| {
            if x.level() != n {
                return shape(format!("expected a level-{n} element, got level {}", x.level()));
            }
            self.apply(x)
        }
    }

    /// Coordinates of `u(b_s)`.
    pub fn image(&self, s: usize) -> Vec<C64> {
        self.coeff.col(s)
    }

    pub fn rank(&self) -> usize {
        if self.coeff.rows() == 0 || self.coeff.cols() == 0 {
            return 0;
        }
        rank(&self.coeff, 1e-10)
    }

    pub fn is_injective(&self) -> bool {
        self.rank() == self.dom.dim()
    }

    pub fn is_surjective(&self) -> bool {
        self.rank() == self.cod.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.max_abs() == 0.0
    }

    /// `c` if this map is `c * id` on a single space.
    pub fn scalar_identity(&self) -> Option<C64> {
        if !self.dom.same_as(&self.cod) {
            return None;
        }
        let d = self.dom.dim();
        if d == 0 {
            return Some(C64::new(0.0, 0.0));
        }
        let c = self.coeff[(0, 0)];
        let diff = &self.coeff - &CMat::identity(d).scale(c);
        (diff.max_abs() <= 1e-14 * c.norm().max(1.0)).then_some(c)
    }

    /// Upper bound for `||u||_cb`, valid for every amplification.
    pub fn cb_upper(&self) -> f64 {
        *self.cb_hi.get_or_init(|| bounds::cb_upper(self))
    }
}

/// Interval for the norm of `u_n`.
pub fn op_norm_at_level(u: &OSMap, n: usize, budget: &Budget, seed: u64) -> Result<Interval> {
    if n == 0 {
        return Err(OpError::InvalidInput("level must be at least 1".into()));
    }
    if u.is_zero() || u.dom.dim() == 0 {
        return Ok(Interval::ZERO);
    }
    if let Some(c) = u.scalar_identity() {
        return Ok(Interval::exact(c.norm()));
    }
    let hi = u.cb_upper();
    let found = search::lower_search(u, n, budget, seed, hi);
    Ok(Interval::new(found.ratio, hi.max(found.ratio)))
}

/// Interval for `||u||_cb`, evaluated at levels `1..=L` where `L` is the
/// ambient size of the codomain's matrix model unless `level` is given.
pub fn cb_norm(u: &OSMap, budget: &Budget, seed: u64, level: Option<usize>) -> Result<Interval> {
    if u.is_zero() || u.dom.dim() == 0 {
        return Ok(Interval::ZERO);
    }
    if let Some(c) = u.scalar_identity() {
        return Ok(Interval::exact(c.norm()));
    }
    let cap = match level {
        Some(l) if l >= 1 => l,
        Some(_) => return Err(OpError::InvalidInput("truncation level must be at least 1".into())),
        None => match u.cod.concrete_form() {
            Some(f) => f.ambient,
            None => {
                return Err(OpError::Unsupported(format!(
                    "codomain of kind {} has no matrix model; supply a truncation level",
                    u.cod.kind()
                )))
            }
        },
    };
    let hi = u.cb_upper();
    let mut lo = 0.0f64;
    for n in 1..=cap {
        let found = search::lower_search(u, n, budget, seed, hi);
        lo = lo.max(found.ratio);
        if lo >= hi {
            break;
        }
    }
    Ok(Interval::new(lo, hi.max(lo)))
}

/// Best ratio `||u_n(x)|| / ||x||` found, with the element achieving it.
pub fn search_witness(u: &OSMap, n: usize, budget: &Budget, seed: u64) -> (f64, Option<LevelElement>) {
    let found = search::lower_search(u, n, budget, seed, f64::INFINITY);
    (found.ratio, found.witness)
}
