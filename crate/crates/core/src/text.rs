//! Line-oriented text formats and their canonical writers.
//!
//! Every format ignores blank lines and `#` comments. Rationals are always
//! written as `num/den`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::finite::{tuples, FiniteStructure, TupleRef};
use crate::formula::{parse, Signature};
use crate::graded::{GradedDescriptor, GradedKind, PartialIsometry};
use crate::metric::RationalMetricSpace;
use crate::rational::{parse_rational, zero, Frac, Rational};
use crate::reduction::ReductionInstance;
use crate::urysohn::{AnchoredStructure, RelationDef};
use crate::vaught::{FiniteGSpace, GradedTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TextError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, TextError> {
    Err(TextError { line, message: message.into() })
}

/// Non-empty, comment-stripped lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn rational(line: usize, tok: &str) -> Result<Rational, TextError> {
    parse_rational(tok).map_err(|e| TextError { line, message: e.to_string() })
}

/// `points` (with or without the colon).
fn is_points(tok: &str, keyword: &str) -> bool {
    tok == keyword || tok.strip_suffix(':') == Some(keyword)
}

/// Collects `points:` and distance lines for one metric block.
#[derive(Default)]
struct MetricBlock {
    header: Option<(usize, Vec<String>)>,
    pairs: Vec<(usize, String, String, Rational)>,
}

impl MetricBlock {
    fn header(&mut self, line: usize, toks: &[&str]) -> Result<(), TextError> {
        if self.header.is_some() {
            return err(line, "second points line");
        }
        self.header = Some((line, toks.iter().map(|s| s.to_string()).collect()));
        Ok(())
    }

    fn pair(&mut self, line: usize, toks: &[&str]) -> Result<(), TextError> {
        if toks.len() != 3 {
            return err(line, "expected `d p q num/den`");
        }
        self.pairs.push((line, toks[0].into(), toks[1].into(), rational(line, toks[2])?));
        Ok(())
    }

    fn build(self, what: &str) -> Result<RationalMetricSpace, TextError> {
        let Some((hline, points)) = self.header else {
            return err(0, format!("missing {what} points line"));
        };
        let n = points.len();
        let mut seen = BTreeSet::new();
        for p in &points {
            if !seen.insert(p) {
                return err(hline, format!("duplicate point `{p}`"));
            }
        }
        let mut dist: Vec<Vec<Option<Rational>>> = vec![vec![None; n]; n];
        for i in 0..n {
            dist[i][i] = Some(zero());
        }
        for (line, a, b, v) in self.pairs {
            let pos = |p: &str| points.iter().position(|x| x == p);
            let (Some(i), Some(j)) = (pos(&a), pos(&b)) else {
                return err(line, format!("unknown point in `{a} {b}`"));
            };
            if i == j {
                if v != zero() {
                    return err(line, format!("d({a}, {a}) must be 0"));
                }
                continue;
            }
            if dist[i][j].is_some() {
                return err(line, format!("distance {a} {b} given twice"));
            }
            dist[i][j] = Some(v.clone());
            dist[j][i] = Some(v);
        }
        let mut full = vec![vec![zero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                match &dist[i][j] {
                    Some(v) => full[i][j] = v.clone(),
                    None => return err(hline, format!("missing distance {} {}", points[i], points[j])),
                }
            }
        }
        RationalMetricSpace::new(points, full).map_err(|e| TextError { line: hline, message: e.to_string() })
    }
}

fn write_metric(out: &mut String, space: &RationalMetricSpace, points_kw: &str, d_kw: &str) {
    let _ = writeln!(out, "{points_kw}: {}", space.points().join(" "));
    for i in 0..space.len() {
        for j in i + 1..space.len() {
            let _ = writeln!(out, "{d_kw} {} {} {}", space.name(i), space.name(j), Frac(space.d(i, j)));
        }
    }
}

// ---------------------------------------------------------------- metric spaces

pub fn parse_space(text: &str) -> Result<RationalMetricSpace, TextError> {
    let mut block = MetricBlock::default();
    for (line, toks) in lines(text) {
        match toks[0] {
            t if is_points(t, "points") => block.header(line, &toks[1..])?,
            "d" => block.pair(line, &toks[1..])?,
            other => return err(line, format!("unexpected `{other}`")),
        }
    }
    block.build("")
}

/// The raw table of a space file, without metric checks: `d a b v` sets
/// both directions unless `d b a` is given explicitly, so asymmetric and
/// out-of-range tables survive for [`crate::metric::validate_metric`].
pub fn parse_distance_table(text: &str) -> Result<(Vec<String>, Vec<Vec<Rational>>), TextError> {
    let mut points: Option<Vec<String>> = None;
    let mut explicit: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    for (line, toks) in lines(text) {
        match toks[0] {
            t if is_points(t, "points") => {
                if points.is_some() {
                    return err(line, "second points line");
                }
                points = Some(toks[1..].iter().map(|s| s.to_string()).collect());
            }
            "d" => {
                let Some(pts) = &points else { return err(line, "`d` before `points`") };
                if toks.len() != 4 {
                    return err(line, "expected `d p q num/den`");
                }
                let pos = |p: &str| {
                    pts.iter().position(|x| x == p).ok_or(TextError { line, message: format!("unknown point `{p}`") })
                };
                let (i, j) = (pos(toks[1])?, pos(toks[2])?);
                if explicit.insert((i, j), rational(line, toks[3])?).is_some() {
                    return err(line, format!("distance {} {} given twice", toks[1], toks[2]));
                }
            }
            other => return err(line, format!("unexpected `{other}`")),
        }
    }
    let Some(points) = points else { return err(0, "missing points line") };
    let n = points.len();
    let mut dist = vec![vec![zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if let Some(v) = explicit.get(&(i, j)).or_else(|| explicit.get(&(j, i))) {
                dist[i][j] = v.clone();
            } else if i != j {
                return err(0, format!("missing distance {} {}", points[i], points[j]));
            }
        }
    }
    Ok((points, dist))
}

pub fn write_space(space: &RationalMetricSpace) -> String {
    let mut out = String::new();
    write_metric(&mut out, space, "points", "d");
    out
}

// ---------------------------------------------------------------- structures

/// `(line, name, modulus, [(line, tuple, value)])` of one `rel` block.
type RelBlock = (usize, String, Option<Rational>, Vec<(usize, Vec<String>, Rational)>);

/// A metric block, then `rel <name> [modulus q]` blocks of
/// `v p_1 ... p_k num/den` lines, and `const <name> <point>` lines.
pub fn parse_structure(text: &str) -> Result<FiniteStructure, TextError> {
    let mut block = MetricBlock::default();
    let mut rels: Vec<RelBlock> = Vec::new();
    let mut consts: Vec<(usize, String, String)> = Vec::new();
    for (line, toks) in lines(text) {
        match toks[0] {
            t if is_points(t, "points") => block.header(line, &toks[1..])?,
            "d" => block.pair(line, &toks[1..])?,
            "rel" => {
                let modulus = match toks.len() {
                    2 => None,
                    4 if toks[2] == "modulus" => Some(rational(line, toks[3])?),
                    _ => return err(line, "expected `rel <name> [modulus q]`"),
                };
                rels.push((line, toks[1].to_string(), modulus, Vec::new()));
            }
            "v" => {
                let Some(cur) = rels.last_mut() else {
                    return err(line, "`v` line outside a `rel` block");
                };
                if toks.len() < 3 {
                    return err(line, "expected `v p_1 ... p_k num/den`");
                }
                let v = rational(line, toks[toks.len() - 1])?;
                cur.3.push((line, toks[1..toks.len() - 1].iter().map(|s| s.to_string()).collect(), v));
            }
            "const" => {
                if toks.len() != 3 {
                    return err(line, "expected `const <name> <point>`");
                }
                consts.push((line, toks[1].into(), toks[2].into()));
            }
            other => return err(line, format!("unexpected `{other}`")),
        }
    }
    let space = block.build("")?;
    let n = space.len();
    let mut sig = Signature::new();
    let mut tables = BTreeMap::new();
    for (line, name, modulus, entries) in rels {
        let Some(arity) = entries.first().map(|e| e.1.len()) else {
            return err(line, format!("relation `{name}` has no values"));
        };
        sig = match modulus {
            Some(m) => sig.with_relation_modulus(&name, arity, m),
            None => sig.with_relation(&name, arity),
        }
        .map_err(|e| TextError { line, message: e.to_string() })?;
        let mut table: Vec<Option<Rational>> = vec![None; n.pow(arity as u32)];
        for (vline, pts, v) in entries {
            if pts.len() != arity {
                return err(vline, format!("`{name}` has arity {arity}"));
            }
            let mut idx = 0;
            for p in &pts {
                let Some(i) = space.index_of(p) else {
                    return err(vline, format!("unknown point `{p}`"));
                };
                idx = idx * n + i;
            }
            if table[idx].replace(v).is_some() {
                return err(vline, format!("value of `{name}` given twice"));
            }
        }
        let full: Option<Vec<Rational>> = table.into_iter().collect();
        let Some(full) = full else {
            return err(line, format!("table of `{name}` is incomplete"));
        };
        tables.insert(name, full);
    }
    let mut cmap = BTreeMap::new();
    for (line, name, point) in consts {
        sig = sig.with_constant(&name).map_err(|e| TextError { line, message: e.to_string() })?;
        let Some(i) = space.index_of(&point) else {
            return err(line, format!("unknown point `{point}`"));
        };
        cmap.insert(name, i);
    }
    FiniteStructure::new(space, sig, tables, cmap).map_err(|e| TextError { line: 0, message: e.to_string() })
}

pub fn write_structure(m: &FiniteStructure) -> String {
    let mut out = write_space(m.space());
    let n = m.space().len();
    for r in m.sig().relations() {
        let _ = writeln!(out, "rel {} modulus {}", r.name, Frac(&r.modulus));
        for t in tuples(n, r.arity) {
            let names: Vec<&str> = t.iter().map(|&i| m.space().name(i)).collect();
            let _ = writeln!(out, "v {} {}", names.join(" "), Frac(m.rel(&r.name, &t).unwrap()));
        }
    }
    for c in m.sig().constants() {
        let _ = writeln!(out, "const {c} {}", m.space().name(m.consts()[c]));
    }
    out
}

// ---------------------------------------------------------------- tuple enumerations

/// Lines `tuple <relation> p_1 ... p_k`.
pub fn parse_enumeration(text: &str, m: &FiniteStructure) -> Result<Vec<TupleRef>, TextError> {
    let mut out = Vec::new();
    for (line, toks) in lines(text) {
        if toks[0] != "tuple" || toks.len() < 2 {
            return err(line, "expected `tuple <relation> p_1 ... p_k`");
        }
        let Some(r) = m.sig().relation(toks[1]) else {
            return err(line, format!("unknown relation `{}`", toks[1]));
        };
        if r.arity != toks.len() - 2 {
            return err(line, format!("`{}` has arity {}", r.name, r.arity));
        }
        let tuple = toks[2..]
            .iter()
            .map(|p| m.space().index_of(p).ok_or_else(|| TextError { line, message: format!("unknown point `{p}`") }))
            .collect::<Result<_, _>>()?;
        out.push(TupleRef { relation: r.name.clone(), tuple });
    }
    Ok(out)
}

pub fn write_enumeration(e: &[TupleRef], space: &RationalMetricSpace) -> String {
    let mut out = String::new();
    for t in e {
        let names: Vec<&str> = t.tuple.iter().map(|&i| space.name(i)).collect();
        let _ = writeln!(out, "tuple {} {}", t.relation, names.join(" "));
    }
    out
}

// ---------------------------------------------------------------- partial isometries and descriptors

/// Lines `map p q`.
pub fn parse_map(text: &str, space: &RationalMetricSpace) -> Result<PartialIsometry, TextError> {
    let mut pairs = Vec::new();
    for (line, toks) in lines(text) {
        if toks.len() != 3 || toks[0] != "map" {
            return err(line, "expected `map p q`");
        }
        let idx =
            |p: &str| space.index_of(p).ok_or_else(|| TextError { line, message: format!("unknown point `{p}`") });
        let (a, b) = (idx(toks[1])?, idx(toks[2])?);
        if pairs.iter().any(|&(x, _)| x == a) {
            return err(line, format!("`{}` mapped twice", toks[1]));
        }
        pairs.push((a, b));
    }
    PartialIsometry::new(space, pairs).map_err(|e| TextError { line: 0, message: e.to_string() })
}

pub fn write_map(g: &PartialIsometry, space: &RationalMetricSpace) -> String {
    g.pairs().map(|(a, b)| format!("map {} {}\n", space.name(a), space.name(b))).collect()
}

/// `graded (linear|sqrt) q [s̄] -> [s̄′]`, or `max{ d1; d2; ... }`.
pub fn parse_descriptor(text: &str) -> Result<GradedDescriptor, TextError> {
    let body: String = lines(text).map(|(_, t)| t.join(" ")).collect::<Vec<_>>().join(" ");
    let spaced =
        body.replace('[', " [ ").replace(']', " ] ").replace('{', " { ").replace('}', " } ").replace(';', " ; ");
    let toks: Vec<&str> = spaced.split_whitespace().collect();
    let mut pos = 0;
    let d = descriptor(&toks, &mut pos)?;
    if pos != toks.len() {
        return err(1, format!("trailing `{}`", toks[pos]));
    }
    Ok(d)
}

fn descriptor(toks: &[&str], pos: &mut usize) -> Result<GradedDescriptor, TextError> {
    let next = |pos: &mut usize| -> Result<&str, TextError> {
        let t = toks.get(*pos).copied().ok_or(TextError { line: 1, message: "unexpected end".into() })?;
        *pos += 1;
        Ok(t)
    };
    let expect = |pos: &mut usize, want: &str| -> Result<(), TextError> {
        let t = next(pos)?;
        if t != want {
            return err(1, format!("expected `{want}`, found `{t}`"));
        }
        Ok(())
    };
    match next(pos)? {
        "max" => {
            expect(pos, "{")?;
            let mut parts = vec![descriptor(toks, pos)?];
            loop {
                match next(pos)? {
                    ";" => parts.push(descriptor(toks, pos)?),
                    "}" => return Ok(GradedDescriptor::Max(parts)),
                    t => return err(1, format!("expected `;` or `}}`, found `{t}`")),
                }
            }
        }
        "graded" => {
            let kind = match next(pos)? {
                "linear" => GradedKind::Linear,
                "sqrt" => GradedKind::Sqrt,
                t => return err(1, format!("unknown kind `{t}`")),
            };
            let scale = rational(1, next(pos)?)?;
            let tuple = |pos: &mut usize| -> Result<Vec<String>, TextError> {
                expect(pos, "[")?;
                let mut out = Vec::new();
                loop {
                    match next(pos)? {
                        "]" => return Ok(out),
                        t => out.push(t.to_string()),
                    }
                }
            };
            let base = tuple(pos)?;
            expect(pos, "->")?;
            let shift = tuple(pos)?;
            if base.len() != shift.len() {
                return err(1, "base and shift tuples differ in length");
            }
            Ok(GradedDescriptor::Basic { kind, scale, base, shift })
        }
        t => err(1, format!("expected `graded` or `max`, found `{t}`")),
    }
}

// ---------------------------------------------------------------- G-spaces

/// A G-space file: the group, graded tables, and named crisp subsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GSpaceDoc {
    pub space: FiniteGSpace,
    pub subsets: BTreeMap<String, BTreeSet<usize>>,
    pub group_subsets: BTreeMap<String, BTreeSet<usize>>,
}

/// `points p ...`, `perm <name> <images>` (generators), then
/// `graded-space <name> <values>`, `graded-group <name> <values>` (values in
/// element order, identity first), `subset <name> <points>` and
/// `group-subset <name> <elements>`.
pub fn parse_gspace(text: &str) -> Result<GSpaceDoc, TextError> {
    let mut points: Option<Vec<String>> = None;
    let mut gens: Vec<(String, Vec<usize>)> = Vec::new();
    let mut rest: Vec<(usize, Vec<&str>)> = Vec::new();
    for (line, toks) in lines(text) {
        match toks[0] {
            t if is_points(t, "points") => {
                if points.is_some() {
                    return err(line, "second points line");
                }
                points = Some(toks[1..].iter().map(|s| s.to_string()).collect());
            }
            "perm" => {
                let Some(pts) = &points else { return err(line, "`perm` before `points`") };
                if toks.len() != pts.len() + 2 {
                    return err(line, "`perm` needs one image per point");
                }
                let images = toks[2..]
                    .iter()
                    .map(|p| {
                        pts.iter()
                            .position(|x| x == p)
                            .ok_or(TextError { line, message: format!("unknown point `{p}`") })
                    })
                    .collect::<Result<_, _>>()?;
                gens.push((toks[1].to_string(), images));
            }
            "graded-space" | "graded-group" | "subset" | "group-subset" => rest.push((line, toks)),
            other => return err(line, format!("unexpected `{other}`")),
        }
    }
    let Some(points) = points else { return err(0, "missing points line") };
    let mut space =
        FiniteGSpace::generated(points, gens, 5040).map_err(|e| TextError { line: 0, message: e.to_string() })?;
    let mut subsets = BTreeMap::new();
    let mut group_subsets = BTreeMap::new();
    for (line, toks) in rest {
        if toks.len() < 2 {
            return err(line, "missing name");
        }
        let wrap = |e: crate::vaught::VaughtError| TextError { line, message: e.to_string() };
        match toks[0] {
            "graded-space" | "graded-group" => {
                let values = toks[2..].iter().map(|t| rational(line, t)).collect::<Result<Vec<_>, _>>()?;
                let t = GradedTable::new(values).map_err(wrap)?;
                if toks[0] == "graded-space" {
                    space.add_space_table(toks[1], t).map_err(wrap)?;
                } else {
                    space.add_group_table(toks[1], t).map_err(wrap)?;
                }
            }
            "subset" => {
                let set = toks[2..]
                    .iter()
                    .map(|p| space.point_index(p).ok_or(TextError { line, message: format!("unknown point `{p}`") }))
                    .collect::<Result<_, _>>()?;
                if subsets.insert(toks[1].to_string(), set).is_some() {
                    return err(line, format!("duplicate subset `{}`", toks[1]));
                }
            }
            _ => {
                let set = toks[2..]
                    .iter()
                    .map(|p| {
                        space.element_index(p).ok_or(TextError { line, message: format!("unknown element `{p}`") })
                    })
                    .collect::<Result<_, _>>()?;
                if group_subsets.insert(toks[1].to_string(), set).is_some() {
                    return err(line, format!("duplicate group subset `{}`", toks[1]));
                }
            }
        }
    }
    Ok(GSpaceDoc { space, subsets, group_subsets })
}

pub fn write_gspace(doc: &GSpaceDoc) -> String {
    let x = &doc.space;
    let mut out = format!("points {}\n", x.points().join(" "));
    for (name, perm) in x.generators() {
        let images: Vec<&str> = perm.iter().map(|&i| x.points()[i].as_str()).collect();
        let _ = writeln!(out, "perm {name} {}", images.join(" "));
    }
    let _ = writeln!(out, "# elements: {}", x.element_names().join(" "));
    let values = |t: &GradedTable| t.values().iter().map(|v| Frac(v).to_string()).collect::<Vec<_>>().join(" ");
    for (name, t) in x.space_tables() {
        let _ = writeln!(out, "graded-space {name} {}", values(t));
    }
    for (name, t) in x.group_tables() {
        let _ = writeln!(out, "graded-group {name} {}", values(t));
    }
    for (name, s) in &doc.subsets {
        let pts: Vec<&str> = s.iter().map(|&i| x.points()[i].as_str()).collect();
        let _ = writeln!(out, "subset {name} {}", pts.join(" "));
    }
    for (name, s) in &doc.group_subsets {
        let els: Vec<&str> = s.iter().map(|&i| x.element_names()[i].as_str()).collect();
        let _ = writeln!(out, "group-subset {name} {}", els.join(" "));
    }
    out.lines().map(|l| l.trim_end().to_string() + "\n").collect()
}

// ---------------------------------------------------------------- reduction instances

/// `points:`/`d` for `Y`, `x-points:`/`dx` for `X`,
/// `perm <name> <Y images> | <X images>`, `basis <name> <X points>`,
/// optional `enum <Y points>`.
pub fn parse_instance(text: &str) -> Result<ReductionInstance, TextError> {
    let mut y = MetricBlock::default();
    let mut x = MetricBlock::default();
    let mut perms: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut basis: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut enumeration: Option<(usize, Vec<&str>)> = None;
    for (line, toks) in lines(text) {
        match toks[0] {
            t if is_points(t, "points") => y.header(line, &toks[1..])?,
            t if is_points(t, "x-points") => x.header(line, &toks[1..])?,
            "d" => y.pair(line, &toks[1..])?,
            "dx" => x.pair(line, &toks[1..])?,
            "perm" => perms.push((line, toks)),
            "basis" => basis.push((line, toks)),
            "enum" => enumeration = Some((line, toks)),
            other => return err(line, format!("unexpected `{other}`")),
        }
    }
    let (y, x) = (y.build("Y")?, x.build("X")?);
    let lookup = |space: &RationalMetricSpace, line: usize, p: &str| {
        space.index_of(p).ok_or(TextError { line, message: format!("unknown point `{p}`") })
    };
    let mut gens = Vec::new();
    for (line, toks) in perms {
        let Some(bar) = toks.iter().position(|&t| t == "|") else {
            return err(line, "expected `perm <name> <Y images> | <X images>`");
        };
        if toks.len() < 2 || bar < 2 {
            return err(line, "missing generator name");
        }
        let gy = toks[2..bar].iter().map(|p| lookup(&y, line, p)).collect::<Result<_, _>>()?;
        let gx = toks[bar + 1..].iter().map(|p| lookup(&x, line, p)).collect::<Result<_, _>>()?;
        gens.push((toks[1].to_string(), gy, gx));
    }
    let mut sets = Vec::new();
    for (line, toks) in basis {
        if toks.len() < 2 {
            return err(line, "missing basis name");
        }
        let set = toks[2..].iter().map(|p| lookup(&x, line, p)).collect::<Result<_, _>>()?;
        sets.push((toks[1].to_string(), set));
    }
    let enumeration = match enumeration {
        Some((line, toks)) => Some(toks[1..].iter().map(|p| lookup(&y, line, p)).collect::<Result<_, _>>()?),
        None => None,
    };
    ReductionInstance::new(y, x, gens, sets, enumeration).map_err(|e| TextError { line: 0, message: e.to_string() })
}

pub fn write_instance(inst: &ReductionInstance) -> String {
    let mut out = String::new();
    write_metric(&mut out, inst.y(), "points", "d");
    write_metric(&mut out, inst.x(), "x-points", "dx");
    for (name, gy, gx) in inst.generators() {
        let ys: Vec<&str> = gy.iter().map(|&i| inst.y().name(i)).collect();
        let xs: Vec<&str> = gx.iter().map(|&i| inst.x().name(i)).collect();
        let _ = writeln!(out, "perm {name} {} | {}", ys.join(" "), xs.join(" "));
    }
    for (name, set) in inst.basis() {
        let pts: Vec<&str> = set.iter().map(|&i| inst.x().name(i)).collect();
        let _ = writeln!(out, "basis {name} {}", pts.join(" "));
    }
    let en: Vec<&str> = inst.enumeration().iter().map(|&i| inst.y().name(i)).collect();
    let _ = writeln!(out, "enum {}", en.join(" "));
    out
}

// ---------------------------------------------------------------- anchored structures

/// A metric block of anchors, then `def <R> <params> := <formula>` lines.
pub fn parse_anchored(text: &str) -> Result<AnchoredStructure, TextError> {
    let mut block = MetricBlock::default();
    let mut defs: Vec<(usize, String, Vec<String>, String)> = Vec::new();
    for (line, toks) in lines(text) {
        match toks[0] {
            t if is_points(t, "points") => block.header(line, &toks[1..])?,
            "d" => block.pair(line, &toks[1..])?,
            "def" => {
                let Some(assign) = toks.iter().position(|&t| t == ":=") else {
                    return err(line, "expected `def <R> <params> := <formula>`");
                };
                if assign < 2 {
                    return err(line, "missing relation name");
                }
                let params = toks[2..assign].iter().map(|s| s.to_string()).collect();
                defs.push((line, toks[1].to_string(), params, toks[assign + 1..].join(" ")));
            }
            other => return err(line, format!("unexpected `{other}`")),
        }
    }
    let anchors = block.build("")?;
    let mut base = Signature::new();
    for p in anchors.points() {
        base = base.with_constant(p).map_err(|e| TextError { line: 0, message: e.to_string() })?;
    }
    let mut parsed = Vec::new();
    for (line, name, params, body) in defs {
        let body = parse(&body, &base).map_err(|e| TextError { line, message: e.to_string() })?;
        parsed.push((name, RelationDef { params, body }));
    }
    AnchoredStructure::new(anchors, parsed).map_err(|e| TextError { line: 0, message: e.to_string() })
}

pub fn write_anchored(st: &AnchoredStructure) -> String {
    let mut out = write_space(st.anchors());
    for (name, def) in st.defs() {
        let _ = writeln!(out, "def {name} {} := {}", def.params.join(" "), def.body);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    const SPACE: &str = "points: a b c\nd a b 1/2\nd a c 1/2\n# comment\nd b c 1/1\n";

    #[test]
    fn space_round_trip() {
        let s = parse_space(SPACE).unwrap();
        assert_eq!(write_space(&s), "points: a b c\nd a b 1/2\nd a c 1/2\nd b c 1/1\n");
        assert_eq!(parse_space(&write_space(&s)).unwrap(), s);
        let missing = parse_space("points: a b c\nd a b 1/2\nd a c 1/2\n").unwrap_err();
        assert!(missing.message.contains("missing distance"));
        assert!(parse_space("points: a b\nd a b 0.5\n").is_err());
    }

    #[test]
    fn structure_round_trip() {
        let text = format!("{SPACE}rel R\nv a 0/1\nv b 1/2\nv c 1/2\nconst k a\n");
        let m = parse_structure(&text).unwrap();
        assert_eq!(m.rel("R", &[1]), Some(&q(1, 2)));
        let w = write_structure(&m);
        assert_eq!(parse_structure(&w).unwrap(), m);
        assert_eq!(write_structure(&parse_structure(&w).unwrap()), w);
        assert!(parse_structure(&format!("{SPACE}rel R\nv a 0/1\n")).is_err());
    }

    #[test]
    fn descriptor_round_trip() {
        let text = "max{graded linear 2/1 [a b] -> [a b]; graded sqrt 1/3 [c] -> [c]}";
        let d = parse_descriptor(text).unwrap();
        assert_eq!(parse_descriptor(&d.to_string()).unwrap(), d);
        assert!(parse_descriptor("graded linear 1/1 [a] -> [a b]").is_err());
    }

    #[test]
    fn gspace_round_trip() {
        let text = "points x y\nperm s y x\ngraded-space phi 0/1 1/1\ngraded-group J 0/1 1/2\nsubset A x\ngroup-subset G e s\n";
        let doc = parse_gspace(text).unwrap();
        assert_eq!(doc.space.order(), 2);
        let w = write_gspace(&doc);
        assert_eq!(parse_gspace(&w).unwrap(), doc);
        assert_eq!(write_gspace(&parse_gspace(&w).unwrap()), w);
    }

    #[test]
    fn instance_round_trip() {
        let text = "points: a b\nd a b 1/1\nx-points: u v\ndx u v 1/2\nperm s b a | v u\nbasis U u\nbasis V v\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.elements().len(), 2);
        let w = write_instance(&inst);
        assert_eq!(parse_instance(&w).unwrap(), inst);
    }

    #[test]
    fn anchored_and_map() {
        let text = "points: u0 c\nd u0 c 1/8\ndef R x := (d x u0)\n";
        let st = parse_anchored(text).unwrap();
        assert_eq!(parse_anchored(&write_anchored(&st)).unwrap(), st);
        let s = parse_space(SPACE).unwrap();
        let g = parse_map("map a a\nmap b c\nmap c b\n", &s).unwrap();
        assert_eq!(parse_map(&write_map(&g, &s), &s).unwrap(), g);
        assert!(parse_map("map a b\n", &s).is_ok());
        assert!(parse_map("map a b\nmap b b\n", &s).is_err());
    }
}
