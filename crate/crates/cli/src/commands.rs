use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::time::Instant;

use katetov_core::finite::{
    default_enumeration, delta_seq, eval, mod_member, standard_vars, Assignment, FiniteStructure, ScOutcome, ScProbe,
    TupleRef,
};
use katetov_core::formula::{borel_level, infer_signature, lipschitz, parse, Comparison, Formula, Signature};
use katetov_core::graded::{
    approx_search, check_formula_invariance, check_graded_axioms, graded_eval, isometry_group, oligo_probe, rho_s,
    ApproxOutcome, GroupMetricContext, InvarianceMode, PartialIsometry,
};
use katetov_core::metric::{
    amalgamate, displacement_factor, one_point_extend, qu_enumerate, validate_metric, AmalgamationMethod,
    KatetovFunction, RationalMetricSpace,
};
use katetov_core::rational::{parse_rational, Frac, Rational};
use katetov_core::reduction::{encode, orbit_equiv, ReductionInstance};
use katetov_core::text::{self, GSpaceDoc};
use katetov_core::urysohn::{eval_urysohn, qf_decide, theta_demo, AnchoredStructure, QuantifierBudget};
use katetov_core::vaught::{lemma_suite, nice_closure, vaught_delta, vaught_sets, vaught_star};
use katetov_core::Enclosure;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::catalog::{Catalog, Kind};
use crate::report::{InputDigest, Report};
use crate::{CatalogCommand, Cli, Cmp, Command, Mode, SigArgs};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation: exit status 2.
    #[error("{0}")]
    Usage(String),
    /// The inputs were read but the computation failed: exit status 1.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

fn domain<E: Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Domain(if context.is_empty() { e.to_string() } else { format!("{context}: {e}") })
}

pub enum Output {
    /// A report, and whether the command's checks passed.
    Report(Report, bool),
    Raw(String),
}

fn r(q: &Rational) -> Value {
    Value::String(Frac(q).to_string())
}

fn enc(e: &Enclosure) -> Value {
    json!({ "lo": r(e.lo()), "hi": r(e.hi()), "width": r(&e.width()) })
}

fn names(space: &RationalMetricSpace, idx: impl IntoIterator<Item = usize>) -> Vec<String> {
    idx.into_iter().map(|i| space.name(i).to_string()).collect()
}

fn map_json(space: &RationalMetricSpace, g: &PartialIsometry) -> Vec<String> {
    g.pairs().map(|(a, b)| format!("{}->{}", space.name(a), space.name(b))).collect()
}

struct Ctx {
    catalog: Option<Catalog>,
    digest: InputDigest,
}

impl Ctx {
    fn catalog(&self) -> Result<&Catalog, CliError> {
        self.catalog.as_ref().ok_or_else(|| CliError::Usage("no catalog: pass --catalog or set KATETOV_CATALOG".into()))
    }

    /// Reads a file, or a catalog entry for `@name`.
    fn load(&mut self, src: &str) -> Result<String, CliError> {
        let text = match src.strip_prefix('@') {
            Some(name) => self.catalog()?.get(name).map_err(domain(""))?.1,
            None => std::fs::read_to_string(src).map_err(domain(src))?,
        };
        self.digest.add(src, &text);
        Ok(text)
    }

    fn space(&mut self, src: &str) -> Result<RationalMetricSpace, CliError> {
        text::parse_space(&self.load(src)?).map_err(domain(src))
    }

    fn structure(&mut self, src: &str) -> Result<FiniteStructure, CliError> {
        text::parse_structure(&self.load(src)?).map_err(domain(src))
    }

    fn gspace(&mut self, src: &str) -> Result<GSpaceDoc, CliError> {
        text::parse_gspace(&self.load(src)?).map_err(domain(src))
    }

    fn instance(&mut self, src: &str) -> Result<ReductionInstance, CliError> {
        text::parse_instance(&self.load(src)?).map_err(domain(src))
    }

    fn anchored(&mut self, src: &str) -> Result<AnchoredStructure, CliError> {
        text::parse_anchored(&self.load(src)?).map_err(domain(src))
    }

    /// Formula text given inline (starting with `(` or a digit) or as a source.
    fn formula_text(&mut self, arg: &str) -> Result<String, CliError> {
        let inline = arg.trim_start().starts_with(|c: char| c == '(' || c.is_ascii_digit());
        if inline {
            self.digest.add("formula", arg);
            Ok(arg.trim().to_string())
        } else {
            Ok(self.load(arg)?.trim().to_string())
        }
    }

    fn formula(&mut self, arg: &str, sig: &Signature) -> Result<Formula, CliError> {
        let t = self.formula_text(arg)?;
        parse(&t, sig).map_err(domain("formula"))
    }

    fn signature(&mut self, args: &SigArgs, text: &str) -> Result<Signature, CliError> {
        let mut sig = match &args.structure {
            Some(src) => self.structure(src)?.sig().clone(),
            None => Signature::new(),
        };
        for spec in &args.rels {
            let parts: Vec<&str> = spec.split(':').collect();
            let bad = || CliError::Usage(format!("--rel expects NAME:ARITY[:MODULUS], got `{spec}`"));
            let arity: usize = parts.get(1).and_then(|a| a.parse().ok()).ok_or_else(bad)?;
            sig = match parts.as_slice() {
                [name, _] => sig.with_relation(name, arity),
                [name, _, m] => sig.with_relation_modulus(name, arity, parse_rational(m).map_err(|_| bad())?),
                _ => return Err(bad()),
            }
            .map_err(domain("signature"))?;
        }
        for c in &args.consts {
            sig = sig.with_constant(c).map_err(domain("signature"))?;
        }
        infer_signature(text, &sig).map_err(domain("formula"))
    }

    fn enumeration(&mut self, src: Option<&str>, m: &FiniteStructure) -> Result<Vec<TupleRef>, CliError> {
        let src = match src {
            Some(s) => Some(s.to_string()),
            None => self.catalog.as_ref().and_then(|c| c.manifest().enumeration.clone()).map(|n| format!("@{n}")),
        };
        match src {
            Some(s) => text::parse_enumeration(&self.load(&s)?, m).map_err(domain(&s)),
            None => Ok(default_enumeration(m.sig(), m.space().len())),
        }
    }
}

fn point(space: &RationalMetricSpace, name: &str) -> Result<usize, CliError> {
    space.require(name).map_err(domain(""))
}

fn assignment(space: &RationalMetricSpace, specs: &[String]) -> Result<Assignment, CliError> {
    specs
        .iter()
        .map(|s| {
            let (v, p) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("expected VAR=POINT, got `{s}`")))?;
            Ok((v.to_string(), point(space, p)?))
        })
        .collect()
}

fn partial_map(space: &RationalMetricSpace, specs: &[String]) -> Result<PartialIsometry, CliError> {
    let pairs = specs
        .iter()
        .map(|s| s.split_once(':').ok_or_else(|| CliError::Usage(format!("expected FROM:TO, got `{s}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    PartialIsometry::from_names(space, &pairs).map_err(domain("map"))
}

fn comparison(c: Cmp) -> Comparison {
    match c {
        Cmp::Lt => Comparison::LessThan,
        Cmp::Gt => Comparison::GreaterThan,
    }
}

fn cmp_symbol(c: Cmp) -> &'static str {
    match c {
        Cmp::Lt => "<",
        Cmp::Gt => ">",
    }
}

pub fn run(cli: &Cli, echo: &str) -> Result<Output, CliError> {
    let start = Instant::now();
    let catalog = cli.catalog.as_deref().map(Catalog::open).transpose().map_err(domain("catalog"))?;
    let mut ctx = Ctx { catalog, digest: InputDigest::default() };
    let (result, exact, ok) = match &cli.command {
        Command::Catalog(c) => return catalog_command(&mut ctx, c, echo, start),
        other => dispatch(&mut ctx, other)?,
    };
    let report = Report {
        command: echo.to_string(),
        inputs_digest: ctx.digest.finish(),
        exact,
        result,
        timing_us: start.elapsed().as_micros() as u64,
    };
    Ok(Output::Report(report, ok))
}

fn catalog_command(ctx: &mut Ctx, c: &CatalogCommand, echo: &str, start: Instant) -> Result<Output, CliError> {
    let result = match c {
        CatalogCommand::Get { name } => {
            let (_, text) = ctx.catalog()?.get(name).map_err(domain(""))?;
            return Ok(Output::Raw(text));
        }
        CatalogCommand::Put { name, file, kind, against } => {
            let kind = match kind.or_else(|| Kind::from_extension(file)) {
                Some(k) => k,
                None => {
                    return Err(CliError::Usage(format!("cannot infer the kind of {}; pass --kind", file.display())))
                }
            };
            let label = file.display().to_string();
            let text = std::fs::read_to_string(file).map_err(domain(&label))?;
            ctx.digest.add(&label, &text);
            ctx.catalog()?;
            let cat = ctx.catalog.as_mut().expect("checked above");
            let entry = cat.put(name, kind, &text, against.as_deref()).map_err(domain(""))?;
            serde_json::to_value(entry).expect("entries serialize")
        }
        CatalogCommand::List => serde_json::to_value(ctx.catalog()?.manifest()).expect("manifest serializes"),
    };
    let digest = std::mem::take(&mut ctx.digest).finish();
    let report = Report {
        command: echo.into(),
        inputs_digest: digest,
        exact: true,
        result,
        timing_us: start.elapsed().as_micros() as u64,
    };
    Ok(Output::Report(report, true))
}

/// `(result, exact, checks passed)`.
fn dispatch(ctx: &mut Ctx, command: &Command) -> Result<(Value, bool, bool), CliError> {
    Ok(match command {
        Command::Validate { space } => {
            let (points, dist) = text::parse_distance_table(&ctx.load(space)?).map_err(domain(space))?;
            let report = validate_metric(&points, &dist);
            let violations: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            (json!({ "ok": report.is_ok(), "points": points.len(), "violations": violations }), true, true)
        }
        Command::Extend { space, values, name } => {
            let s = ctx.space(space)?;
            let ext = one_point_extend(&s, &KatetovFunction::new(values.clone()), name).map_err(domain(""))?;
            (json!({ "point": name, "space": text::write_space(&ext) }), true, true)
        }
        Command::Amalgamate { a, b, shared, eps, a_points } => {
            let (sa, sb) = (ctx.space(a)?, ctx.space(b)?);
            let a_points = if a_points.is_empty() { sa.points().to_vec() } else { a_points.clone() };
            let out = amalgamate(&sa, &a_points, &sb, *shared, eps).map_err(domain(""))?;
            let method = match &out.method {
                AmalgamationMethod::Inductive => "inductive".to_string(),
                AmalgamationMethod::ShortestPath { trigger: (x, y, z) } => {
                    format!("shortest-path (blocked at {x} {y} {z})")
                }
            };
            let factor = displacement_factor(a_points.len(), *shared);
            let embedding: Vec<String> =
                sb.points().iter().zip(&out.witness.map).map(|(p, &i)| format!("{p}->{}", out.space.name(i))).collect();
            let result = json!({
                "method": method,
                "factor": r(&factor),
                "displacement": r(&(&factor * eps)),
                "embedding": embedding,
                "embedding_verified": out.witness.verify(),
                "space": text::write_space(&out.space),
            });
            (result, true, true)
        }
        Command::EnumerateQu { seed, denominator, budget } => {
            let s = ctx.space(seed)?;
            let out = qu_enumerate(&s, *denominator, *budget).map_err(domain(""))?;
            let tasks: Vec<String> = out
                .certificate
                .iter()
                .map(|t| {
                    let vals: Vec<String> = t.values.iter().map(|v| Frac(v).to_string()).collect();
                    let how = if t.added { "added" } else { "existing" };
                    format!("[{}] at [{}] -> {} ({how})", t.subset.join(" "), vals.join(" "), t.realized_by)
                })
                .collect();
            let result = json!({
                "points": out.space.len(),
                "added": out.space.len() - s.len(),
                "tasks": tasks,
                "space": text::write_space(&out.space),
            });
            (result, true, true)
        }
        Command::Parse { formula, sig } => {
            let t = ctx.formula_text(formula)?;
            let sig = ctx.signature(sig, &t)?;
            let phi = parse(&t, &sig).map_err(domain("formula"))?;
            let result = json!({
                "formula": phi.to_string(),
                "free_variables": phi.free_vars().into_iter().collect::<Vec<_>>(),
                "constants": phi.constants().into_iter().collect::<Vec<_>>(),
                "quantifier_depth": phi.quantifier_depth(),
            });
            (result, true, true)
        }
        Command::Lipschitz { formula, sig } => {
            let t = ctx.formula_text(formula)?;
            let sig = ctx.signature(sig, &t)?;
            let phi = parse(&t, &sig).map_err(domain("formula"))?;
            let l = lipschitz(&phi, &sig).map_err(domain(""))?;
            (json!({ "formula": phi.to_string(), "lipschitz": r(&l) }), true, true)
        }
        Command::BorelLevel { formula, cmp, sig } => {
            let t = ctx.formula_text(formula)?;
            let sig = ctx.signature(sig, &t)?;
            let phi = parse(&t, &sig).map_err(domain("formula"))?;
            let level = borel_level(&phi, comparison(*cmp));
            let result =
                json!({ "formula": phi.to_string(), "comparison": cmp_symbol(*cmp), "level": level.to_string() });
            (result, true, true)
        }
        Command::Eval { structure, formula, assign } => {
            let m = ctx.structure(structure)?;
            let phi = ctx.formula(formula, m.sig())?;
            let a = assignment(m.space(), assign)?;
            let v = eval(&phi, &m, &a).map_err(domain(""))?;
            (json!({ "formula": phi.to_string(), "value": r(&v) }), true, true)
        }
        Command::DeltaSeq { m, n, k, enumeration } => {
            let (sm, sn) = (ctx.structure(m)?, ctx.structure(n)?);
            let e = ctx.enumeration(enumeration.as_deref(), &sm)?;
            let k = k.unwrap_or(e.len());
            let d = delta_seq(&sm, &sn, &e, k).map_err(domain(""))?;
            (json!({ "k": k, "enumeration_length": e.len(), "enclosure": enc(&d) }), false, true)
        }
        Command::ModMember { structure, formula, eps, cmp, assign } => {
            let m = ctx.structure(structure)?;
            let phi = ctx.formula(formula, m.sig())?;
            let a = assignment(m.space(), assign)?;
            let v = eval(&phi, &m, &a).map_err(domain(""))?;
            let member = mod_member(&m, &phi, &a, eps, comparison(*cmp)).map_err(domain(""))?;
            let result = json!({
                "formula": phi.to_string(),
                "value": r(&v),
                "condition": format!("{} {}", cmp_symbol(*cmp), Frac(eps)),
                "member": member,
            });
            (result, true, true)
        }
        Command::ScProbe { structure, pool, n, eps, depth, budget } => {
            let m = ctx.structure(structure)?;
            let pool_text = ctx.load(pool)?;
            let formulas = pool_text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(|l| parse(l, m.sig()).map_err(domain(pool)))
                .collect::<Result<Vec<_>, _>>()?;
            let probe = ScProbe {
                structure: &m,
                vars: standard_vars(*n),
                eps: eps.clone(),
                pool: formulas,
                depth: *depth,
                budget: *budget,
            };
            let outcome = probe.run().map_err(domain(""))?;
            let cond = |c: &katetov_core::finite::Condition| format!("{} <= {}", c.formula, Frac(&c.bound));
            let mut result = match outcome {
                ScOutcome::Witness(cs) => {
                    json!({ "outcome": "witness", "conditions": cs.iter().map(cond).collect::<Vec<_>>() })
                }
                ScOutcome::Counterexample { tuple, failure } => json!({
                    "outcome": "counterexample",
                    "tuple": names(m.space(), tuple),
                    "failure": failure.map(|f| json!({
                        "condition": cond(&f.condition),
                        "tuple": names(m.space(), f.tuple.iter().copied()),
                        "delta": f.delta.iter().map(cond).collect::<Vec<_>>(),
                    })),
                }),
                ScOutcome::Inconclusive { examined } => json!({ "outcome": "inconclusive", "examined": examined }),
            };
            result["scope"] = json!("finite-scale evidence, not a proof of separable categoricity");
            (result, true, true)
        }
        Command::EvalUrysohn { anchored, formula, params, mesh, rounds } => {
            let st = ctx.anchored(anchored)?;
            let phi = ctx.formula(formula, st.sig())?;
            let params = params
                .iter()
                .map(|s| {
                    let (v, p) =
                        s.split_once('=').ok_or_else(|| CliError::Usage(format!("expected VAR=ANCHOR, got `{s}`")))?;
                    Ok((v.to_string(), p.to_string()))
                })
                .collect::<Result<BTreeMap<_, _>, CliError>>()?;
            let out =
                eval_urysohn(&phi, &st, &params, &QuantifierBudget::new(mesh.clone(), *rounds)).map_err(domain(""))?;
            let result = json!({
                "formula": phi.to_string(),
                "enclosure": enc(&out.enclosure),
                "passes": out.passes.iter().map(enc).collect::<Vec<_>>(),
                "steps": out.steps.iter().map(r).collect::<Vec<_>>(),
                "nodes": out.nodes,
            });
            (result, out.enclosure.is_exact(), true)
        }
        Command::QfDecide { fragment, formula, thresholds } => {
            let s = ctx.space(fragment)?;
            let mut sig = Signature::new();
            for p in s.points() {
                sig = sig.with_constant(p).map_err(domain("fragment"))?;
            }
            let phi = ctx.formula(formula, &sig)?;
            let d = qf_decide(&phi, &s, thresholds).map_err(domain(""))?;
            let ts: Vec<Value> = d
                .thresholds
                .iter()
                .map(|t| json!({ "threshold": r(&t.threshold), "less": t.less, "greater": t.greater }))
                .collect();
            (json!({ "formula": phi.to_string(), "value": r(&d.value), "thresholds": ts }), true, true)
        }
        Command::ThetaDemo { q, tol } => {
            let out = theta_demo(q, tol).map_err(domain(""))?;
            let e = &out.enclosure;
            let brackets = e.lo() * e.lo() <= *q && e.hi() * e.hi() >= *q;
            let result = json!({
                "q": r(q),
                "enclosure": enc(e),
                "encloses_sqrt_q": brackets,
                "intervals": out.intervals,
            });
            (result, e.is_exact(), true)
        }
        Command::GradedEval { space, desc, map } => {
            let s = ctx.space(space)?;
            let d = text::parse_descriptor(desc).map_err(domain("descriptor"))?;
            let g = partial_map(&s, map)?;
            let v = graded_eval(&d, &g, &s).map_err(domain(""))?;
            let result = json!({
                "descriptor": d.to_string(),
                "map": map_json(&s, &g),
                "value": v.to_string(),
                "square": r(v.square()),
                "enclosure": enc(&v.enclosure(40)),
            });
            (result, v.exact().is_some(), true)
        }
        Command::GradedAxioms { space, desc } => {
            let s = ctx.space(space)?;
            let d = text::parse_descriptor(desc).map_err(domain("descriptor"))?;
            let group = isometry_group(&s);
            let pairs: Vec<_> = group.iter().flat_map(|g| group.iter().map(move |h| (g.clone(), h.clone()))).collect();
            let rep = check_graded_axioms(&d, &s, &pairs).map_err(domain(""))?;
            let failures: Vec<String> = rep.failures.iter().map(|f| format!("{f:?}")).collect();
            let result = json!({
                "descriptor": d.to_string(),
                "group_order": group.len(),
                "checked": rep.checked,
                "passed": rep.passed(),
                "failures": failures,
            });
            (result, true, rep.passed())
        }
        Command::RhoS { space, g, h, k, order } => {
            let s = ctx.space(space)?;
            let (g, h) = (partial_map(&s, g)?, partial_map(&s, h)?);
            let c = if order.is_empty() {
                GroupMetricContext::all(&s)
            } else {
                let idx = order.iter().map(|p| point(&s, p)).collect::<Result<Vec<_>, _>>()?;
                GroupMetricContext::new(&s, idx).map_err(domain(""))?
            };
            let k = k.unwrap_or(c.enumeration().len());
            let d = rho_s(&g, &h, &c, &s, k).map_err(domain(""))?;
            (json!({ "k": k, "enclosure": enc(&d) }), false, true)
        }
        Command::Invariance { structure, formula, assign, mode } => {
            let m = ctx.structure(structure)?;
            let phi = ctx.formula(formula, m.sig())?;
            let a = assignment(m.space(), assign)?;
            let (perms, mode) = match mode {
                Mode::Isometries => (m.space().isometries(), InvarianceMode::Isometries),
                Mode::Automorphisms => (m.automorphisms(), InvarianceMode::Automorphisms),
            };
            let samples = perms
                .iter()
                .map(|p| PartialIsometry::from_perm(m.space(), p))
                .collect::<Result<Vec<_>, _>>()
                .map_err(domain(""))?;
            let rep = check_formula_invariance(&phi, &a, &m, &samples, mode).map_err(domain(""))?;
            let failures: Vec<Value> = rep
                .failures
                .iter()
                .map(|f| json!({ "map": map_json(m.space(), &f.g), "gap": r(&f.gap), "bound": r(&f.bound) }))
                .collect();
            let passed = failures.is_empty();
            let result = json!({
                "formula": phi.to_string(),
                "modulus": r(&rep.modulus),
                "checked": rep.checked,
                "max_gap": r(&rep.max_gap),
                "failures": failures,
            });
            (result, true, passed)
        }
        Command::ApproxSearch { m, n, desc, eps, budget, k, enumeration } => {
            let (sm, sn) = (ctx.structure(m)?, ctx.structure(n)?);
            let d = text::parse_descriptor(desc).map_err(domain("descriptor"))?;
            let e = ctx.enumeration(enumeration.as_deref(), &sm)?;
            let k = k.unwrap_or(e.len());
            let out = approx_search(&sm, &sn, &d, eps, *budget, &e, k).map_err(domain(""))?;
            let result = match out {
                ApproxOutcome::Found { g, h_value, distance, examined } => json!({
                    "found": true,
                    "map": map_json(sm.space(), &g),
                    "h_value": h_value.to_string(),
                    "distance": enc(&distance),
                    "examined": examined,
                }),
                ApproxOutcome::NotFound { examined, exhausted } => {
                    json!({ "found": false, "examined": examined, "exhausted": exhausted })
                }
            };
            (result, false, true)
        }
        Command::OligoProbe { structure, n, eps, limit } => {
            let m = ctx.structure(structure)?;
            let out = oligo_probe(&m, *n, eps, *limit).map_err(domain(""))?;
            let family: Vec<Vec<String>> = out.family.iter().map(|t| names(m.space(), t.iter().copied())).collect();
            let result = json!({
                "group_order": out.group_order,
                "orbits": out.orbits,
                "family_size": family.len(),
                "family": family,
            });
            (result, true, true)
        }
        Command::VaughtDelta { gspace, phi, j } | Command::VaughtStar { gspace, phi, j } => {
            let doc = ctx.gspace(gspace)?;
            let x = &doc.space;
            let (p, jt) = (x.space_table(phi).map_err(domain(""))?, x.group_table(j).map_err(domain(""))?);
            let out = if matches!(command, Command::VaughtDelta { .. }) {
                vaught_delta(x, p, jt)
            } else {
                vaught_star(x, p, jt)
            }
            .map_err(domain(""))?;
            let values: serde_json::Map<String, Value> =
                x.points().iter().zip(out.values()).map(|(name, v)| (name.clone(), r(v))).collect();
            (json!({ "values": values }), true, true)
        }
        Command::VaughtSets { gspace, set, group_set } => {
            let doc = ctx.gspace(gspace)?;
            let x = &doc.space;
            let a = doc.subsets.get(set).ok_or_else(|| CliError::Domain(format!("no subset `{set}`")))?;
            let u = doc
                .group_subsets
                .get(group_set)
                .ok_or_else(|| CliError::Domain(format!("no group subset `{group_set}`")))?;
            let (star, delta) = vaught_sets(x, a, u).map_err(domain(""))?;
            let pts = |s: &BTreeSet<usize>| s.iter().map(|&i| x.points()[i].clone()).collect::<Vec<_>>();
            (json!({ "star": pts(&star), "delta": pts(&delta) }), true, true)
        }
        Command::NiceClosure { gspace, phi, coset, scale, budget } => {
            let doc = ctx.gspace(gspace)?;
            let x = &doc.space;
            let family =
                phi.iter().map(|p| x.space_table(p).cloned()).collect::<Result<Vec<_>, _>>().map_err(domain(""))?;
            let cosets =
                coset.iter().map(|c| x.group_table(c).cloned()).collect::<Result<Vec<_>, _>>().map_err(domain(""))?;
            let out = nice_closure(x, &family, &cosets, scale, *budget).map_err(domain(""))?;
            let members: Vec<Vec<Value>> = out.family.iter().map(|t| t.values().iter().map(r).collect()).collect();
            let result = json!({
                "points": x.points(),
                "size": members.len(),
                "applications": out.applications,
                "fixed_point": out.fixed_point,
                "family": members,
            });
            (result, true, true)
        }
        Command::Encode { instance, x, k } => {
            let inst = ctx.instance(instance)?;
            let xi = point(inst.x(), x)?;
            let k = k.unwrap_or(inst.y().len());
            let m = encode(&inst, xi, k).map_err(domain(""))?;
            (json!({ "point": x, "arity": k, "structure": text::write_structure(&m) }), true, true)
        }
        Command::OrbitEquiv { instance, x, x2 } => {
            let inst = ctx.instance(instance)?;
            let (a, b) = (point(inst.x(), x)?, point(inst.x(), x2)?);
            let e = orbit_equiv(&inst, a, b).map_err(domain(""))?;
            let result = json!({
                "same_orbit": e.same_orbit,
                "isomorphic": e.isomorphic,
                "group_witness": e.group_witness,
                "isometry_witness": e.isometry_witness.map(|f| names(inst.y(), f)),
            });
            (result, true, e.same_orbit == e.isomorphic)
        }
        Command::LemmaSuite { seed, count } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let rep = lemma_suite(&mut rng, *count);
            let lemmas: Vec<Value> = rep
                .lemmas
                .iter()
                .map(|l| json!({ "name": l.name, "statement": l.statement, "checks": l.checks, "violations": l.violations }))
                .collect();
            let result = json!({ "seed": seed, "instances": rep.instances, "passed": rep.passed(), "lemmas": lemmas });
            (result, true, rep.passed())
        }
        Command::Catalog(_) => unreachable!("handled by catalog_command"),
    })
}
