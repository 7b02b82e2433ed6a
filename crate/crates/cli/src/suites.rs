//! Verification suites behind `opspace verify`.

use std::path::PathBuf;

use opspace::category::{self, ConstructionKind, Pieces};
use opspace::coalgebra::{check_laws, Coalgebra};
use opspace::colimit::{amplified_chain, colimit_norm, flatten_element, ChainRule, ChainSpec, ColimitElement};
use opspace::config::{Budget, Search};
use opspace::maps::{is_complete_contraction, is_complete_isometry, is_complete_quotient};
use opspace::rng::{derive, gaussian_vec, SeededRng};
use opspace::space::check_ruan;
use opspace::tensor::{elementary, structure_maps};
use opspace::trace_class::{identity_grid, lemma_contraction};
use opspace::{CMat, Interval, LevelElement, OSMap, OSpace, Verdict};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{Check, Outcome, SuiteReport};

pub const SUITES: [&str; 10] = [
    "ruan",
    "product",
    "coproduct",
    "equaliser",
    "coequaliser",
    "quotient",
    "tensor",
    "trace-lemma",
    "colimit",
    "coalgebra",
];

const SAMPLES: usize = 20;

/// A named JSON document, either bundled or read from disk.
struct Input {
    label: String,
    text: String,
}

impl Input {
    fn parse<T: serde::de::DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_str(&self.text).map_err(|e| CliError::Parse(format!("{}: {e}", self.label)))
    }

    fn space(&self) -> Result<OSpace, CliError> {
        OSpace::from_json(&self.text).map_err(|e| self.blame(e))
    }

    fn blame(&self, e: opspace::OpError) -> CliError {
        match CliError::from(e) {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", self.label)),
            CliError::Shape(m) => CliError::Shape(format!("{}: {m}", self.label)),
            other => other,
        }
    }
}

fn bundled(name: &str) -> Input {
    let text = match name {
        "m2.json" => include_str!("../fixtures/m2.json"),
        "diag2.json" => include_str!("../fixtures/diag2.json"),
        "scalars.json" => include_str!("../fixtures/scalars.json"),
        "swap_grid.json" => include_str!("../fixtures/swap_grid.json"),
        "diag2_first_unit.json" => include_str!("../fixtures/diag2_first_unit.json"),
        "parallel_pair.json" => include_str!("../fixtures/parallel_pair.json"),
        "scalar_chain.json" => include_str!("../fixtures/scalar_chain.json"),
        "coalgebra_trivial.json" => include_str!("../fixtures/coalgebra_trivial.json"),
        other => unreachable!("no bundled fixture {other}"),
    };
    Input {
        label: format!("bundled:{name}"),
        text: text.to_string(),
    }
}

fn defaults(suite: &str) -> Vec<&'static str> {
    match suite {
        "ruan" | "tensor" => vec!["m2.json"],
        "product" | "coproduct" => vec!["m2.json", "diag2.json"],
        "equaliser" | "coequaliser" => vec!["parallel_pair.json"],
        "quotient" => vec!["diag2.json", "diag2_first_unit.json"],
        "trace-lemma" => vec!["m2.json", "swap_grid.json"],
        "colimit" => vec!["scalar_chain.json"],
        "coalgebra" => vec!["coalgebra_trivial.json"],
        _ => vec![],
    }
}

fn need(inputs: &[Input], n: usize, what: &str) -> Result<(), CliError> {
    if inputs.len() == n {
        Ok(())
    } else {
        Err(CliError::Shape(format!("expected {what}, got {} input file(s)", inputs.len())))
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    checks: Vec<Check>,
    witnesses: Vec<Value>,
    info: serde_json::Map<String, Value>,
}

impl Ctx<'_> {
    fn seed(&self, label: u64) -> u64 {
        self.cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(label)
    }

    fn rng(&self, label: u64) -> SeededRng {
        derive(self.cfg.seed, label)
    }

    fn budget(&self) -> Budget {
        self.cfg.budgets
    }

    fn levels(&self) -> usize {
        self.cfg.budgets.level_cap
    }

    fn report_tol(&self) -> f64 {
        self.cfg.tolerances.report
    }

    fn verdict_tol(&self) -> f64 {
        self.cfg.tolerances.verdict
    }

    fn residual(&mut self, name: &str, r: f64, tol: f64) {
        self.checks.push(Check::residual(name, r, tol));
    }

    fn flag(&mut self, name: &str, ok: bool, detail: Value) {
        let status = if ok { Outcome::Pass } else { Outcome::Fail };
        self.checks.push(Check::new(name, status).with_detail(detail));
    }

    fn verdict(&mut self, name: &str, v: Verdict) {
        let (status, detail) = match &v {
            Verdict::Holds => (Outcome::Pass, Value::Null),
            Verdict::Fails { reason, witness } => {
                if let Some(w) = witness {
                    self.witnesses.push(json!({ "check": name, "witness": w }));
                }
                (Outcome::Fail, json!(reason))
            }
            Verdict::Undecided { reason } => (Outcome::Undecided, json!(reason)),
        };
        self.checks.push(Check::new(name, status).with_detail(detail));
    }
}

/// Distance between two intervals, zero when they overlap.
fn gap(a: &Interval, b: &Interval) -> f64 {
    (a.lo - b.hi).max(b.lo - a.hi).max(0.0)
}

fn random_element(rng: &mut SeededRng, n: usize, d: usize) -> LevelElement {
    LevelElement::new(n, d, gaussian_vec(rng, n * n * d)).expect("sized")
}

pub fn run_suite(
    suite: &str,
    paths: &[PathBuf],
    cfg: &RunConfig,
    depth_override: Option<usize>,
) -> Result<SuiteReport, CliError> {
    if !SUITES.contains(&suite) {
        return Err(CliError::UnknownSuite(suite.to_string()));
    }
    let inputs: Vec<Input> = if paths.is_empty() {
        defaults(suite).into_iter().map(bundled).collect()
    } else {
        paths
            .iter()
            .map(|p| {
                Ok(Input {
                    label: p.display().to_string(),
                    text: crate::read(p)?,
                })
            })
            .collect::<Result<_, CliError>>()?
    };
    let mut ctx = Ctx {
        cfg,
        checks: Vec::new(),
        witnesses: Vec::new(),
        info: serde_json::Map::new(),
    };
    match suite {
        "ruan" => ruan(&mut ctx, &inputs)?,
        "product" => product(&mut ctx, &inputs)?,
        "coproduct" => coproduct(&mut ctx, &inputs)?,
        "equaliser" => equaliser(&mut ctx, &inputs)?,
        "coequaliser" => coequaliser(&mut ctx, &inputs)?,
        "quotient" => quotient(&mut ctx, &inputs)?,
        "tensor" => tensor(&mut ctx, &inputs)?,
        "trace-lemma" => trace_lemma(&mut ctx, &inputs)?,
        "colimit" => colimit(&mut ctx, &inputs, depth_override)?,
        "coalgebra" => coalgebra(&mut ctx, &inputs)?,
        _ => unreachable!(),
    }
    let mut rep = SuiteReport::new(
        suite,
        cfg.seed,
        inputs.into_iter().map(|i| i.label).collect(),
        ctx.checks,
        ctx.witnesses,
    );
    rep.info = ctx.info;
    Ok(rep)
}

fn ruan(ctx: &mut Ctx, inputs: &[Input]) -> Result<(), CliError> {
    need(inputs, 1, "one space")?;
    let x = inputs[0].space()?;
    let r = check_ruan(&x, ctx.levels().max(2), SAMPLES, ctx.seed(1))?;
    let tol = ctx.report_tol();
    ctx.residual("direct sums (M1)", r.max_m1_violation, tol);
    ctx.residual("bimodule bound (M2)", r.max_m2_violation, tol);
    Ok(())
}

fn family(inputs: &[Input]) -> Result<Vec<OSpace>, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Shape("expected at least one space".into()));
    }
    inputs.iter().map(Input::space).collect()
}

fn product(ctx: &mut Ctx, inputs: &[Input]) -> Result<(), CliError> {
    let parts = family(inputs)?;
    let prod = category::product(&parts);
    let mut rng = ctx.rng(2);
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES {
        for n in 1..=ctx.levels() {
            let pieces: Vec<LevelElement> = parts.iter().map(|p| random_element(&mut rng, n, p.dim())).collect();
            let got = prod.space.level_norm(&LevelElement::concat(&pieces)?)?;
            let mut want = Interval::ZERO;
            for (p, e) in parts.iter().zip(&pieces) {
                want = want.max(&p.level_norm(e)?);
            }
            worst = worst.max(gap(&got, &want) / want.hi.max(1.0));
        }
    }
    ctx.residual("block maximum", worst, ctx.report_tol());
    for (i, (p, inc)) in prod.projections.iter().zip(&prod.inclusions).enumerate() {
        let v = is_complete_quotient(p, ctx.levels(), SAMPLES, ctx.verdict_tol(), ctx.seed(10 + i as u64))?;
        ctx.verdict(&format!("projection {i} is a complete quotient"), v);
        let v = is_complete_isometry(inc, ctx.levels(), SAMPLES, ctx.verdict_tol(), ctx.seed(20 + i as u64))?;
        ctx.verdict(&format!("inclusion {i} is a complete isometry"), v);
    }
    universal(ctx, ConstructionKind::Product, &Pieces::Family(parts))
}

fn coproduct(ctx: &mut Ctx, inputs: &[Input]) -> Result<(), CliError> {
    let parts = family(inputs)?;
    let search = Search::from_budget(&ctx.budget(), ctx.seed(3));
    let co = category::coproduct(&parts, search)?;
    let mut rng = ctx.rng(3);
    let mut worst = 0.0f64;
    for _ in 0..SAMPLES {
        let pieces: Vec<LevelElement> = parts.iter().map(|p| random_element(&mut rng, 1, p.dim())).collect();
        let got = co.space.level_norm(&LevelElement::concat(&pieces)?)?;
        let mut want = Interval::ZERO;
        for (p, e) in parts.iter().zip(&pieces) {
            want = want.add(&p.level_norm(e)?);
        }
        worst = worst.max(gap(&got, &want) / want.hi.max(1.0));
    }
    ctx.residual("level-1 sum of norms", worst, ctx.report_tol());
    for (i, inc) in co.inclusions.iter().enumerate() {
        let v = is_complete_isometry(inc, ctx.levels(), SAMPLES, ctx.verdict_tol(), ctx.seed(30 + i as u64))?;
        ctx.verdict(&format!("inclusion {i} is a complete isometry"), v);
    }
    universal(ctx, ConstructionKind::Coproduct, &Pieces::Family(parts))
}

fn universal(ctx: &mut Ctx, kind: ConstructionKind, pieces: &Pieces) -> Result<(), CliError> {
    let r = category::verify_universal(kind, pieces, SAMPLES, ctx.seed(40))?;
    let tol = ctx.report_tol();
    ctx.residual("mediator commutes", r.residual_commute, tol);
    ctx.residual("mediator is unique", r.residual_unique, tol);
    Ok(())
}

#[derive(Deserialize)]
struct ParallelPair {
    f: OSMap,
    g: OSMap,
}

fn pair(inputs: &[Input]) -> Result<(OSMap, OSMap), CliError> {
    need(inputs, 1, "one parallel-pair file")?;
    let p: ParallelPair = inputs[0].parse()?;
    if !p.f.dom().same_as(p.g.dom()) || !p.f.cod().same_as(p.g.cod()) {
        return Err(CliError::Shape("f and g must share domain and codomain".into()));
    }
    Ok((p.f, p.g))
}

fn equaliser(ctx: &mut Ctx, inputs: &[Input]) -> Result<(), CliError> {
    let (f, g) = pair(inputs)?;
    let (_, inc) = category::equaliser(&f, &g)?;
    let r = f.compose(&inc)?.coeff().max_abs_diff(g.compose(&inc)?.coeff());
    ctx.residual("f e = g e", r, ctx.report_tol());
    let v = is_complete_isometry(&inc, ctx.levels(), SAMPLES, ctx.verdict_tol(), ctx.seed(50))?;
    ctx.verdict("inclusion is a complete isometry", v);
    universal(ctx, ConstructionKind::Equaliser, &Pieces::Parallel(f, g))
}

fn coequaliser(ctx: &mut Ctx, inputs: &[Input]) -> Result<(), CliError> {
    let (f, g) = pair(inputs)?;
    let (_, q) = category::coequaliser(&f, &g)?;
    let r = q.compose(&f)?.coeff().max_abs_diff(q.compose(&g)?.coeff());
    ctx.residual("q f = q g", r, ctx.report_tol());
    let v = is_complete_quotient(&q, ctx.levels(), SAMPLES, ctx.verdict_tol(), ctx.seed(60))?;
    ctx.verdict("q is a complete quotient", v);
    universal(ctx, ConstructionKind::Coequaliser, &Pieces::Parallel(f, g))
}

fn quotient(ctx: &mut Ctx, inputs: &[Input]) -> Result<(), CliError> {
    need(inputs, 2, "a space and a kernel matrix")?;
    let x = inputs[0].space()?;
    let kernel: CMat = inputs[1].parse()?;
    if kernel.rows() != x.dim() {
        return Err(CliError::Shape(format!(
            "kernel vectors have {} coordinates, space has dimension {}",
            kernel.rows(),
            x.dim()
        )));
    }
    let (_, q) = category::quotient(&x, &kernel)?;
    let v = is_complete_quotient(&q, ctx.levels(), SAMPLES, ctx.verdict_tol(), ctx.seed(70))?;
    ctx.verdict("quotient map is a complete quotient", v);
    let mut rng = ctx.rng(7);
    let mut excess = 0.0f64;
    for _ in 0..SAMPLES {
        for n in 1..=ctx.levels() {
            let e = random_element(&mut rng, n, x.dim());
            let before = x.level_norm(&e)?;
            let after = q.cod().level_norm(&q.apply(&e)?)?;
            excess = excess.max(after.lo - before.hi);
        }
    }
    ctx.residual("norms do not increase", excess.max(0.0), ctx.report_tol());
    Ok(())
}

fn tensor(ctx: &mut Ctx, inputs: &[Input]) -> Result<(), CliError> {
    need(inputs, 1, "one space")?;
    let x = inputs[0].space()?;
    let c = OSpace::scalars();
    let search = Search::from_budget(&ctx.budget(), ctx.seed(8));
    let cx = OSpace::tensor(&c, &x, search);
    let maps = structure_maps(&x, &c, &c, search);
    let mut rng = ctx.rng(8);
    let mut unitor_gap = 0.0f64;
    for _ in 0..SAMPLES {
        let e = random_element(&mut rng, 1, x.dim());
        let got = cx.level_norm(&e)?;
        let want = x.level_norm(&maps.left_unitor.apply(&e)?)?;
        unitor_gap = unitor_gap.max((got.hi - want.lo).abs().max((got.lo - want.hi).abs()) / want.hi.max(1e-300));
    }
    ctx.residual("unitor gap", unitor_gap, 0.05);

    let y = OSpace::diagonal(2);
    let xy = OSpace::tensor(&x, &y, search);
    let mut cross = 0.0f64;
    for _ in 0..SAMPLES / 4 {
        let a = random_element(&mut rng, 1, x.dim());
        let b = random_element(&mut rng, 1, 2);
        let want = x.level_norm(&a)?.mul(&y.level_norm(&b)?);
        let got = xy.level_norm(&elementary(&a, &b))?;
        cross = cross.max(gap(&got, &want) / want.hi.max(1e-300));
    }
    ctx.residual("cross norm", cross, ctx.verdict_tol());

    let there = structure_maps(&x, &y, &c, search).symmetry;
    let back = structure_maps(&y, &x, &c, search).symmetry;
    let r = back.compose(&there)?.coeff().max_abs_diff(&CMat::identity(x.dim() * 2));
    ctx.residual("symmetry is an involution", r, ctx.report_tol());

    let level = ctx.levels().min(2);
    for (name, u) in [("left unitor", &maps.left_unitor), ("right unitor", &maps.right_unitor)] {
        let v = is_complete_isometry(u, level, 4, ctx.verdict_tol(), ctx.seed(80))?;
        ctx.verdict(&format!("{name} is a complete isometry"), v);
    }
    Ok(())
}

fn trace_lemma(ctx: &mut Ctx, inputs: &[Input]) -> Result<(), CliError> {
    need(inputs, 2, "a space and a level-n element")?;
    let x = inputs[0].space()?;
    let grid: LevelElement = inputs[1].parse()?;
    if grid.dim() != x.dim() {
        return Err(CliError::Shape(format!(
            "element has {} coordinates, space has dimension {}",
            grid.dim(),
            x.dim()
        )));
    }
    let norm = x.level_norm(&grid)?;
    ctx.flag(
        "element in the unit ball",
        norm.lo <= 1.0 + ctx.verdict_tol(),
        json!({ "lo": norm.lo, "hi": norm.hi }),
    );
    let u = lemma_contraction(&x, &grid)?;
    let v = is_complete_contraction(&u, ctx.levels(), ctx.verdict_tol(), &ctx.budget(), ctx.seed(90))?;
    ctx.verdict("induced map is a complete contraction", v);
    let r = u.apply(&identity_grid(grid.level()))?.max_abs_diff(&grid);
    ctx.residual("matrix units map to the element", r, ctx.report_tol());
    Ok(())
}

fn colimit(ctx: &mut Ctx, inputs: &[Input], depth_override: Option<usize>) -> Result<(), CliError> {
    need(inputs, 1, "one chain file")?;
    let spec: ChainSpec = inputs[0].parse()?;
    let depth = depth_override.unwrap_or(spec.depth);
    let chain = spec.build(1, &ctx.budget(), ctx.seed(100))?;
    for (i, v) in chain.link_verdicts().to_vec().into_iter().enumerate() {
        ctx.verdict(&format!("link {i} is a complete contraction"), v);
    }
    // first nonzero stage, all coordinates one
    let top = chain.last_stage().unwrap_or(depth).min(depth);
    let Some(stage) = (0..=top).find(|&i| chain.stage(i).map(|s| s.dim() > 0).unwrap_or(false)) else {
        return Err(CliError::Shape("every stage up to the depth is zero".into()));
    };
    let d = chain.stage(stage)?.dim();
    let e = ColimitElement::new(stage, LevelElement::vector(&vec![opspace::C64::new(1.0, 0.0); d]));
    let tol = ctx.report_tol();
    let r = colimit_norm(&chain, &e, depth, tol)?;
    let rise = r.values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    ctx.residual("representative norms decrease", rise, tol);
    ctx.flag(
        "norm interval is ordered",
        r.interval.lo <= r.interval.hi,
        json!({ "lo": r.interval.lo, "hi": r.interval.hi, "stabilized": r.stabilized }),
    );
    if spec.rule == Some(ChainRule::ScalarExp) && stage == 0 {
        let limit = (-2.0f64).exp();
        ctx.flag(
            "scalar chain limit exp(-2)",
            r.interval.contains(limit, ctx.verdict_tol()),
            json!({ "limit": limit }),
        );
    }
    let amp = amplified_chain(&chain, 2)?;
    let mut rng = ctx.rng(10);
    let e2 = ColimitElement::new(stage, random_element(&mut rng, 2, d));
    let depth2 = depth.min(stage + 3);
    let direct = colimit_norm(&chain, &e2, depth2, tol)?;
    let via = colimit_norm(&amp, &flatten_element(&e2), depth2, tol)?;
    let dev = (direct.interval.hi - via.interval.hi)
        .abs()
        .max((direct.interval.lo - via.interval.lo).abs());
    ctx.residual("amplified chain agrees at level 2", dev, tol);
    Ok(())
}

fn coalgebra(ctx: &mut Ctx, inputs: &[Input]) -> Result<(), CliError> {
    need(inputs, 1, "one coalgebra file")?;
    let c = Coalgebra::from_json(&inputs[0].text).map_err(|e| inputs[0].blame(e))?;
    let tol = ctx.report_tol();
    let rep = check_laws(&c, ctx.levels(), ctx.verdict_tol(), &ctx.budget(), ctx.seed(110))?;
    ctx.residual("left counitality", rep.residuals.left_counit, tol);
    ctx.residual("right counitality", rep.residuals.right_counit, tol);
    ctx.residual("coassociativity", rep.residuals.coassociativity, tol);
    ctx.verdict("comultiplication is a complete contraction", rep.comul_contraction);
    ctx.verdict("counit is a complete contraction", rep.counit_contraction);
    ctx.residual("dual associativity", rep.dual_associativity, tol);
    ctx.residual("dual unit", rep.dual_unit, tol);
    ctx.info.insert("cocommutativity_residual".into(), json!(rep.residuals.cocommutativity));
    Ok(())
}
