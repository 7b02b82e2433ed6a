//! Coalgebras `(X, c: X -> X (x) X, d: X -> C)` over the projective tensor
//! product, with coordinates of `X (x) X` ordered `s * dim + t`.

use serde::{Deserialize, Serialize};

use crate::config::{Budget, Search};
use crate::error::{invalid, shape, Result};
use crate::maps::{is_complete_contraction, OSMap, Verdict};
use crate::matrix::CMat;
use crate::space::OSpace;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Coalgebra {
    pub space: OSpace,
    /// `dim^2 x dim`.
    pub comul: CMat,
    /// `1 x dim`.
    pub counit: CMat,
    #[serde(default)]
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub left_counit: f64,
    pub right_counit: f64,
    pub coassociativity: f64,
    pub cocommutativity: f64,
}

impl Residuals {
    pub fn max_law(&self) -> f64 {
        self.left_counit.max(self.right_counit).max(self.coassociativity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawReport {
    pub residuals: Residuals,
    pub comul_contraction: Verdict,
    pub counit_contraction: Verdict,
    /// Residuals of the transposed structure as a unital algebra on the dual.
    pub dual_associativity: f64,
    pub dual_unit: f64,
}

impl LawReport {
    /// Laws hold within `tol` and neither structure map is shown expansive.
    pub fn passes(&self, tol: f64) -> bool {
        self.residuals.max_law() <= tol && !self.comul_contraction.fails() && !self.counit_contraction.fails()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorphismReport {
    pub comul_residual: f64,
    pub counit_residual: f64,
    pub contraction: Verdict,
}

impl MorphismReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.comul_residual <= tol && self.counit_residual <= tol && !self.contraction.fails()
    }
}

/// `e_s (x) e_t -> e_t (x) e_s`.
fn swap(d: usize) -> CMat {
    let mut p = CMat::zeros(d * d, d * d);
    for s in 0..d {
        for t in 0..d {
            p[(t * d + s, s * d + t)] = crate::matrix::ONE;
        }
    }
    p
}

fn residual(a: &CMat, b: &CMat) -> f64 {
    a.max_abs_diff(b)
}

fn law_residuals(comul: &CMat, counit: &CMat) -> Residuals {
    let d = counit.cols();
    let id = CMat::identity(d);
    let left = counit.kron(&id).mul_unchecked(comul);
    let right = id.kron(counit).mul_unchecked(comul);
    let ca = comul.kron(&id).mul_unchecked(comul);
    let cb = id.kron(comul).mul_unchecked(comul);
    Residuals {
        left_counit: residual(&left, &id),
        right_counit: residual(&right, &id),
        coassociativity: residual(&ca, &cb),
        cocommutativity: residual(&swap(d).mul_unchecked(comul), comul),
    }
}

impl Coalgebra {
    pub fn new(space: OSpace, comul: CMat, counit: CMat, strict: bool) -> Result<Self> {
        let c = Coalgebra {
            space,
            comul,
            counit,
            strict,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Coalgebra = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.space.dim();
        if self.comul.shape() != (d * d, d) {
            return shape(format!("comultiplication must be {}x{d}, got {:?}", d * d, self.comul.shape()));
        }
        if self.counit.shape() != (1, d) {
            return shape(format!("counit must be 1x{d}, got {:?}", self.counit.shape()));
        }
        self.comul.ensure_finite()?;
        self.counit.ensure_finite()?;
        if self.strict {
            let r = law_residuals(&self.comul, &self.counit);
            if r.max_law() != 0.0 {
                return invalid(format!("strict coalgebra has law residual {}", r.max_law()));
            }
        }
        Ok(())
    }

    /// `C` with `c(1) = 1 (x) 1` and `d = id`.
    pub fn trivial() -> Self {
        Coalgebra {
            space: OSpace::scalars(),
            comul: CMat::identity(1),
            counit: CMat::identity(1),
            strict: true,
        }
    }

    /// The diagonal of `M_k` with `c(e_ii) = e_ii (x) e_ii` and `d(e_ii) = 1`.
    pub fn grouplike_diagonal(k: usize) -> Self {
        let mut comul = CMat::zeros(k * k, k);
        for i in 0..k {
            comul[(i * k + i, i)] = crate::matrix::ONE;
        }
        Coalgebra {
            space: OSpace::diagonal(k),
            comul,
            counit: CMat::from_fn(1, k, |_, _| crate::matrix::ONE),
            strict: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn comul_map(&self, search: Search) -> Result<OSMap> {
        let xx = OSpace::tensor(&self.space, &self.space, search);
        OSMap::new(self.space.clone(), xx, self.comul.clone())
    }

    pub fn counit_map(&self) -> Result<OSMap> {
        OSMap::new(self.space.clone(), OSpace::scalars(), self.counit.clone())
    }

    pub fn residuals(&self) -> Residuals {
        law_residuals(&self.comul, &self.counit)
    }
}

pub fn check_laws(c: &Coalgebra, level_cap: usize, tol: f64, budget: &Budget, seed: u64) -> Result<LawReport> {
    c.validate()?;
    let residuals = c.residuals();
    let search = Search::from_budget(budget, seed);
    let comul_contraction = is_complete_contraction(&c.comul_map(search)?, level_cap, tol, budget, seed)?;
    let counit_contraction = is_complete_contraction(&c.counit_map()?, level_cap, tol, budget, seed ^ 1)?;
    let d = c.dim();
    let id = CMat::identity(d);
    let m = c.comul.transpose();
    let unit = c.counit.transpose();
    let dual_associativity = residual(&m.mul_unchecked(&m.kron(&id)), &m.mul_unchecked(&id.kron(&m)));
    let left_unit = m.mul_unchecked(&unit.kron(&id));
    let right_unit = m.mul_unchecked(&id.kron(&unit));
    let dual_unit = residual(&left_unit, &id).max(residual(&right_unit, &id));
    Ok(LawReport {
        residuals,
        comul_contraction,
        counit_contraction,
        dual_associativity,
        dual_unit,
    })
}

pub fn check_morphism(
    f: &OSMap,
    c: &Coalgebra,
    c2: &Coalgebra,
    level_cap: usize,
    tol: f64,
    budget: &Budget,
    seed: u64,
) -> Result<MorphismReport> {
    if !f.dom().same_as(&c.space) || !f.cod().same_as(&c2.space) {
        return invalid("map does not run between the coalgebra spaces");
    }
    let fc = f.coeff();
    let lhs = fc.kron(fc).mul_unchecked(&c.comul);
    let rhs = c2.comul.mul_unchecked(fc);
    let counit_residual = residual(&c2.counit.mul_unchecked(fc), &c.counit);
    Ok(MorphismReport {
        comul_residual: residual(&lhs, &rhs),
        counit_residual,
        contraction: is_complete_contraction(f, level_cap, tol, budget, seed)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouniversalityReport {
    /// `lift` as a coalgebra morphism `C -> G`.
    pub lift: MorphismReport,
    /// `|| eps o lift - f ||` in coordinates.
    pub factor_residual: f64,
}

/// Checks that `lift: C -> G` is a coalgebra morphism with `eps o lift = f`.
pub fn couniversality_demo(
    cofree: &Coalgebra,
    eps: &OSMap,
    c: &Coalgebra,
    f: &OSMap,
    lift: &OSMap,
    tol: f64,
    budget: &Budget,
    seed: u64,
) -> Result<CouniversalityReport> {
    if !eps.dom().same_as(&cofree.space) || !f.dom().same_as(&c.space) || !eps.cod().same_as(f.cod()) {
        return invalid("maps do not match the coalgebras");
    }
    let lift_report = check_morphism(lift, c, cofree, 1, tol, budget, seed)?;
    let composite = eps.compose(lift)?;
    Ok(CouniversalityReport {
        lift: lift_report,
        factor_residual: residual(composite.coeff(), f.coeff()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::C64;

    #[test]
    fn trivial_coalgebra() {
        let r = check_laws(&Coalgebra::trivial(), 2, 1e-9, &Budget::light(), 0).unwrap();
        assert_eq!(r.residuals.max_law(), 0.0);
        assert_eq!(r.residuals.cocommutativity, 0.0);
        assert!(r.comul_contraction.holds() && r.counit_contraction.holds());
        assert!(r.passes(0.0));
    }

    #[test]
    fn doubled_comultiplication() {
        let mut c = Coalgebra::trivial();
        c.comul = CMat::scalar(C64::new(2.0, 0.0));
        c.strict = false;
        let r = check_laws(&c, 2, 1e-9, &Budget::light(), 0).unwrap();
        assert_eq!(r.residuals.left_counit, 1.0);
        assert_eq!(r.residuals.right_counit, 1.0);
        assert!(r.comul_contraction.fails());
        c.strict = true;
        assert!(c.validate().is_err());
    }

    #[test]
    fn grouplike_diagonal() {
        let c = Coalgebra::grouplike_diagonal(2);
        let r = check_laws(&c, 2, 1e-9, &Budget::light(), 0).unwrap();
        assert_eq!(r.residuals.max_law(), 0.0);
        assert_eq!(r.residuals.cocommutativity, 0.0);
        assert_eq!(r.residuals.left_counit, r.residuals.right_counit);
        assert_eq!(r.dual_associativity, 0.0);
        assert_eq!(r.dual_unit, 0.0);
        // d(a, b) = a + b has norm 2 on the diagonal.
        assert!(r.counit_contraction.fails());
        assert!(!r.passes(1e-9));
    }

    #[test]
    fn morphisms() {
        let c = Coalgebra::grouplike_diagonal(2);
        let b = Budget::light();
        let id = OSMap::identity(&c.space);
        assert!(check_morphism(&id, &c, &c, 1, 1e-9, &b, 0).unwrap().passes(0.0));
        let counit = c.counit_map().unwrap();
        let r = check_morphism(&counit, &c, &Coalgebra::trivial(), 1, 1e-9, &b, 0).unwrap();
        assert_eq!((r.comul_residual, r.counit_residual), (0.0, 0.0));
        let f = OSMap::new(c.space.clone(), c.space.clone(), CMat::from_real(&[&[0.3, 0.2], &[0.1, 0.4]])).unwrap();
        assert!(check_morphism(&f, &c, &c, 1, 1e-9, &b, 0).unwrap().comul_residual > 0.01);
        assert!(check_morphism(&id, &c, &Coalgebra::trivial(), 1, 1e-9, &b, 0).is_err());
    }

    #[test]
    fn couniversality_shape() {
        // G = the grouplike coalgebra on C^2 with eps the first coordinate,
        // C = the trivial coalgebra, f = id_C, lift = e_1.
        let g = Coalgebra::grouplike_diagonal(2);
        let c = Coalgebra::trivial();
        let eps = OSMap::new(g.space.clone(), OSpace::scalars(), CMat::from_real(&[&[1.0, 0.0]])).unwrap();
        let f = OSMap::identity(&c.space);
        let lift = OSMap::new(c.space.clone(), g.space.clone(), CMat::from_real(&[&[1.0], &[0.0]])).unwrap();
        let r = couniversality_demo(&g, &eps, &c, &f, &lift, 1e-9, &Budget::light(), 0).unwrap();
        assert_eq!(r.factor_residual, 0.0);
        assert!(r.lift.passes(0.0));
    }

    #[test]
    fn json_shape() {
        let c = Coalgebra::trivial();
        let s = serde_json::to_string(&c).unwrap();
        let back = Coalgebra::from_json(&s).unwrap();
        assert_eq!(back.comul, c.comul);
        assert!(Coalgebra::from_json(r#"{"space":{"kind":"scalars"},"comul":[],"counit":[]}"#).is_err());
    }
}
