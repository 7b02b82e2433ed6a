//! Direct limits of chains `D_0 -> D_1 -> ...` of operator spaces with
//! completely contractive links.
//!
//! The norm of a class is the infimum of the norms of its representatives,
//! which is approached along the chain.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::Budget;
use crate::element::LevelElement;
use crate::error::{invalid, shape, OpError, Result};
use crate::interval::Interval;
use crate::maps::{is_complete_contraction, OSMap, Verdict};
use crate::matrix::{CMat, C64};
use crate::space::OSpace;
use crate::svd::{null_space, pinv};

/// Chains generated on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ChainRule {
    /// `C -> C -> ...` with link `i` multiplying by `exp(-2^-i)`.
    ScalarExp,
    /// `0 -> l_inf^1 -> l_inf^2 -> ...` with the coordinate inclusions.
    Truncation,
}

impl ChainRule {
    fn stage(&self, i: usize) -> OSpace {
        match self {
            ChainRule::ScalarExp => OSpace::scalars(),
            ChainRule::Truncation => {
                if i == 0 {
                    OSpace::zero()
                } else {
                    OSpace::product(vec![OSpace::scalars(); i])
                }
            }
        }
    }

    fn link_coeff(&self, i: usize) -> CMat {
        match self {
            ChainRule::ScalarExp => CMat::scalar(C64::new((-(0.5f64).powi(i as i32)).exp(), 0.0)),
            ChainRule::Truncation => CMat::from_fn(i + 1, i, |a, b| {
                if a == b {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Lower bound on how much the links beyond `depth` can still shrink
    /// any norm, when known in closed form.
    fn tail_factor(&self, depth: usize) -> f64 {
        match self {
            // prod_{i >= depth} exp(-2^-i) = exp(-2^(1-depth))
            ChainRule::ScalarExp => (-(2.0f64).powi(1 - depth as i32)).exp(),
            ChainRule::Truncation => 1.0,
        }
    }
}

enum Source {
    Explicit { stages: Vec<OSpace>, links: Vec<OSMap> },
    Rule(ChainRule),
}

/// A chain of operator spaces, optionally amplified to higher levels.
pub struct ChainDiagram {
    source: Source,
    amplifications: Vec<usize>,
    composites: Mutex<HashMap<(usize, usize), CMat>>,
    link_verdicts: Vec<Verdict>,
}

impl std::fmt::Debug for ChainDiagram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.source {
            Source::Explicit { stages, .. } => write!(f, "ChainDiagram({} stages", stages.len())?,
            Source::Rule(r) => write!(f, "ChainDiagram({r:?}")?,
        }
        write!(f, ", amplified {:?})", self.amplifications)
    }
}

impl Clone for ChainDiagram {
    fn clone(&self) -> Self {
        let source = match &self.source {
            Source::Explicit { stages, links } => Source::Explicit {
                stages: stages.clone(),
                links: links.clone(),
            },
            Source::Rule(r) => Source::Rule(*r),
        };
        ChainDiagram {
            source,
            amplifications: self.amplifications.clone(),
            composites: Mutex::new(self.composites.lock().expect("not poisoned").clone()),
            link_verdicts: self.link_verdicts.clone(),
        }
    }
}

/// An element of the colimit, represented at some stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColimitElement {
    pub stage: usize,
    pub element: LevelElement,
}

impl ColimitElement {
    pub fn new(stage: usize, element: LevelElement) -> Self {
        ColimitElement { stage, element }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColimitNorm {
    pub interval: Interval,
    /// Successive representative norms differ by at most the tolerance at the end.
    pub stabilized: bool,
    /// Some representative already has the limiting norm.
    pub attained: bool,
    /// `||D_{stage,k}(w)||` (upper bounds) for `k = stage..=depth`.
    pub values: Vec<f64>,
}

fn amplify_space(x: &OSpace, n: usize) -> Result<OSpace> {
    if n == 1 || x.dim() == 0 {
        return Ok(x.clone());
    }
    let f = x.concrete_form().ok_or_else(|| {
        OpError::Unsupported(format!("cannot amplify a {} stage without a matrix model", x.kind()))
    })?;
    OSpace::concrete(n * f.ambient, f.amplified_basis(n))
}

fn amplify_coeff(c: &CMat, n: usize) -> CMat {
    if n == 1 {
        return c.clone();
    }
    CMat::identity(n * n).kron(c)
}

impl ChainDiagram {
    /// An explicit chain; every link must not fail the contraction check at
    /// levels up to `level`.
    pub fn new(stages: Vec<OSpace>, links: Vec<CMat>, level: usize, budget: &Budget, seed: u64) -> Result<Self> {
        if stages.is_empty() {
            return invalid("a chain needs at least one stage");
        }
        if links.len() + 1 != stages.len() {
            return shape(format!("{} stages need {} links, got {}", stages.len(), stages.len() - 1, links.len()));
        }
        let mut maps = Vec::with_capacity(links.len());
        let mut verdicts = Vec::with_capacity(links.len());
        for (i, c) in links.into_iter().enumerate() {
            let u = OSMap::new(stages[i].clone(), stages[i + 1].clone(), c)?;
            let v = is_complete_contraction(&u, level, 1e-9, budget, seed.wrapping_add(i as u64))?;
            if v.fails() {
                return invalid(format!("link {i} is not a complete contraction"));
            }
            verdicts.push(v);
            maps.push(u);
        }
        Ok(ChainDiagram {
            source: Source::Explicit { stages, links: maps },
            amplifications: vec![],
            composites: Mutex::new(HashMap::new()),
            link_verdicts: verdicts,
        })
    }

    pub fn from_rule(rule: ChainRule) -> Self {
        ChainDiagram {
            source: Source::Rule(rule),
            amplifications: vec![],
            composites: Mutex::new(HashMap::new()),
            link_verdicts: vec![],
        }
    }

    pub fn rule(&self) -> Option<ChainRule> {
        match self.source {
            Source::Rule(r) => Some(r),
            Source::Explicit { .. } => None,
        }
    }

    /// Contraction verdicts recorded for explicit links.
    pub fn link_verdicts(&self) -> &[Verdict] {
        &self.link_verdicts
    }

    /// Index of the last stage, if the chain is finite.
    pub fn last_stage(&self) -> Option<usize> {
        match &self.source {
            Source::Explicit { stages, .. } => Some(stages.len() - 1),
            Source::Rule(_) => None,
        }
    }

    fn check_stage(&self, i: usize) -> Result<()> {
        match self.last_stage() {
            Some(l) if i > l => invalid(format!("stage {i} is beyond the last stage {l}")),
            _ => Ok(()),
        }
    }

    pub fn stage(&self, i: usize) -> Result<OSpace> {
        self.check_stage(i)?;
        let mut x = match &self.source {
            Source::Explicit { stages, .. } => stages[i].clone(),
            Source::Rule(r) => r.stage(i),
        };
        for &n in &self.amplifications {
            x = amplify_space(&x, n)?;
        }
        Ok(x)
    }

    fn link_coeff(&self, i: usize) -> CMat {
        let mut c = match &self.source {
            Source::Explicit { links, .. } => links[i].coeff().clone(),
            Source::Rule(r) => r.link_coeff(i),
        };
        for &n in &self.amplifications {
            c = amplify_coeff(&c, n);
        }
        c
    }

    /// The link `D_i -> D_{i+1}`.
    pub fn link(&self, i: usize) -> Result<OSMap> {
        self.check_stage(i + 1)?;
        OSMap::new(self.stage(i)?, self.stage(i + 1)?, self.link_coeff(i))
    }

    /// Coefficients of `D_{i,k}`, memoised.
    pub fn composite_coeff(&self, i: usize, k: usize) -> Result<CMat> {
        if k < i {
            return invalid("composite runs backwards");
        }
        self.check_stage(k)?;
        if let Some(c) = self.composites.lock().expect("not poisoned").get(&(i, k)) {
            return Ok(c.clone());
        }
        let c = if k == i {
            CMat::identity(self.stage(i)?.dim())
        } else {
            self.link_coeff(k - 1).matmul(&self.composite_coeff(i, k - 1)?)?
        };
        self.composites
            .lock()
            .expect("not poisoned")
            .insert((i, k), c.clone());
        Ok(c)
    }

    pub fn composite(&self, i: usize, k: usize) -> Result<OSMap> {
        OSMap::new(self.stage(i)?, self.stage(k)?, self.composite_coeff(i, k)?)
    }

    /// The representative of `e` at stage `k >= e.stage`.
    pub fn push(&self, e: &ColimitElement, k: usize) -> Result<LevelElement> {
        let x = self.stage(e.stage)?;
        x.check_element(&e.element)?;
        e.element.map_coords(&self.composite_coeff(e.stage, k)?)
    }
}

/// The chain `M_n(D_0) -> M_n(D_1) -> ...`; stages need matrix models.
pub fn amplified_chain(d: &ChainDiagram, n: usize) -> Result<ChainDiagram> {
    if n == 0 {
        return invalid("level must be at least 1");
    }
    let mut out = d.clone();
    if n > 1 {
        out.amplifications.push(n);
        out.composites = Mutex::new(HashMap::new());
        // Fail early if some stage cannot be amplified.
        let top = d.last_stage().unwrap_or(0);
        for i in 0..=top {
            out.stage(i)?;
        }
    }
    Ok(out)
}

/// A level-`n` element as a level-1 element of the amplified chain.
pub fn flatten_element(e: &ColimitElement) -> ColimitElement {
    let d = e.element.level() * e.element.level() * e.element.dim();
    ColimitElement::new(e.stage, LevelElement::new(1, d, e.element.data().to_vec()).expect("sized"))
}

pub fn colimit_norm(d: &ChainDiagram, e: &ColimitElement, depth: usize, tol: f64) -> Result<ColimitNorm> {
    if depth < e.stage {
        return invalid(format!("depth {depth} is below the element's stage {}", e.stage));
    }
    let depth = match d.last_stage() {
        Some(l) => depth.min(l),
        None => depth,
    };
    let mut values = Vec::with_capacity(depth - e.stage + 1);
    let mut last = Interval::ZERO;
    for k in e.stage..=depth {
        let w = d.push(e, k)?;
        last = d.stage(k)?.level_norm(&w)?;
        values.push(last.hi);
    }
    let hi = values.iter().copied().fold(f64::INFINITY, f64::min);
    let prev = if values.len() >= 2 { values[values.len() - 2] } else { hi };
    let stabilized = (prev - values[values.len() - 1]).abs() <= tol;
    let lo = match (d.last_stage(), d.rule()) {
        (Some(l), _) if depth == l => last.lo,
        (_, Some(rule)) => last.lo * rule.tail_factor(depth),
        _ => (last.lo - (prev - last.hi).abs()).max(0.0),
    };
    let interval = if lo >= hi - 1e-15 && last.is_exact() {
        Interval::exact(hi)
    } else {
        Interval::approximate(lo.min(hi), hi)
    };
    let attained = interval.width() <= tol;
    Ok(ColimitNorm {
        interval,
        stabilized,
        attained,
        values,
    })
}

/// Whether two elements define the same class.
pub fn same_class(d: &ChainDiagram, e1: &ColimitElement, e2: &ColimitElement, depth: usize, tol: f64) -> Result<Verdict> {
    if e1.element.level() != e2.element.level() {
        return shape("elements live at different levels");
    }
    let start = e1.stage.max(e2.stage);
    if depth < start {
        return invalid("depth is below the elements' stages");
    }
    let top = d.last_stage().map_or(depth, |l| depth.min(l));
    for k in start..=top {
        let diff = d.push(e1, k)?.sub(&d.push(e2, k)?)?;
        if diff.max_abs() <= tol {
            return Ok(Verdict::Holds);
        }
    }
    let diff = ColimitElement::new(start, d.push(e1, start)?.sub(&d.push(e2, start)?)?);
    let n = colimit_norm(d, &diff, top, tol)?;
    if n.interval.lo > tol {
        return Ok(Verdict::Fails {
            reason: format!("difference has colimit norm at least {:.9}", n.interval.lo),
            witness: None,
        });
    }
    Ok(Verdict::Undecided {
        reason: format!("difference has colimit norm in [{:.3e}, {:.3e}]", n.interval.lo, n.interval.hi),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FactorizationOutcome {
    /// `f = c_stage o g` with `g` contractive; `g` has one column per target.
    Factors {
        stage: usize,
        g: CMat,
        norms: Vec<f64>,
    },
    /// Target `index` has no contractive preimage at any stage up to the depth;
    /// `fiber_norms[k]` is the smallest preimage norm at stage `k`, absent when
    /// there is no preimage at all.
    Obstruction {
        index: usize,
        fiber_norms: Vec<Option<f64>>,
    },
}

/// Smallest stage `<= depth` through which the map `C^m -> colim`, sending
/// the `j`-th basis vector to `targets[j]`, factors contractively.
pub fn factorization_probe(d: &ChainDiagram, targets: &[ColimitElement], depth: usize, tol: f64) -> Result<FactorizationOutcome> {
    if targets.is_empty() {
        return invalid("no targets given");
    }
    if targets.iter().any(|t| t.element.level() != 1) {
        return invalid("targets must be level-1 elements");
    }
    let cmp = targets.iter().map(|t| t.stage).max().unwrap_or(0).max(depth);
    d.check_stage(cmp)?;
    let images: Vec<Vec<C64>> = targets
        .iter()
        .map(|t| Ok(d.push(t, cmp)?.data().to_vec()))
        .collect::<Result<_>>()?;
    let mut fibers: Vec<Vec<Option<f64>>> = vec![vec![]; targets.len()];
    for lambda in 0..=depth {
        let x = d.stage(lambda)?;
        let c = d.composite_coeff(lambda, cmp)?;
        let left = pinv(&c, 1e-10);
        let ker = null_space(&c, 1e-10);
        let mut cols = Vec::with_capacity(targets.len());
        let mut norms = Vec::with_capacity(targets.len());
        for (j, y) in images.iter().enumerate() {
            let pre = left.mat_vec(y);
            let back = c.mat_vec(&pre);
            let miss = back.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let scale = y.iter().map(|z| z.norm()).fold(1.0, f64::max);
            if miss > tol * scale {
                fibers[j].push(None);
                norms.push(f64::INFINITY);
                cols.push(pre);
                continue;
            }
            let v = fiber_min(&x, &pre, &ker);
            fibers[j].push(Some(v));
            norms.push(v);
            cols.push(pre);
        }
        if norms.iter().all(|v| *v <= 1.0 + tol) {
            let dim = x.dim();
            let g = CMat::from_fn(dim, cols.len(), |a, b| cols[b][a]);
            return Ok(FactorizationOutcome::Factors { stage: lambda, g, norms });
        }
    }
    let index = fibers
        .iter()
        .position(|f| f.iter().all(|v| v.is_none_or(|v| v > 1.0 + tol)))
        .unwrap_or(0);
    Ok(FactorizationOutcome::Obstruction {
        index,
        fiber_norms: fibers.swap_remove(index),
    })
}

/// Upper bound for the smallest norm in `pre + span(ker)`.
fn fiber_min(x: &OSpace, pre: &[C64], ker: &CMat) -> f64 {
    let e = LevelElement::vector(pre);
    if ker.cols() == 0 || x.concrete_form().is_none() {
        return x.level_norm(&e).map(|i| i.hi).unwrap_or(f64::INFINITY);
    }
    let form = x.concrete_form().expect("checked");
    crate::space::quotient_affine(&form, ker, &e).interval.hi
}

/// Least `tau` in `stage..=depth` with `D_{stage,tau} g = D_{stage,tau} g'`.
pub fn essential_uniqueness_probe(
    d: &ChainDiagram,
    stage: usize,
    g: &CMat,
    g2: &CMat,
    depth: usize,
    tol: f64,
) -> Result<Option<usize>> {
    let x = d.stage(stage)?;
    if g.shape() != g2.shape() || g.rows() != x.dim() {
        return shape("maps must both land in the given stage");
    }
    let top = d.last_stage().map_or(depth, |l| depth.min(l));
    let diff = g - g2;
    // The two maps must agree in the colimit.
    for c in 0..diff.cols() {
        let e = ColimitElement::new(stage, LevelElement::vector(&diff.col(c)));
        let n = colimit_norm(d, &e, top, tol)?;
        if n.interval.lo > tol {
            return invalid(format!("the maps differ in the colimit on basis vector {c}"));
        }
    }
    for tau in stage..=top {
        let pushed = d.composite_coeff(stage, tau)?.matmul(&diff)?;
        if pushed.max_abs() <= tol {
            return Ok(Some(tau));
        }
    }
    Ok(None)
}

/// Chain description: either a rule or explicit stages and links.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<ChainRule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<OSpace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<CMat>,
    pub depth: usize,
}

impl ChainSpec {
    pub fn build(&self, level: usize, budget: &Budget, seed: u64) -> Result<ChainDiagram> {
        match (&self.rule, self.stages.is_empty()) {
            (Some(r), true) => Ok(ChainDiagram::from_rule(*r)),
            (None, false) => ChainDiagram::new(self.stages.clone(), self.links.clone(), level, budget, seed),
            _ => invalid("give either a rule or explicit stages"),
        }
    }
}
