//! Formulas over the rational Urysohn space: certified enclosures for
//! quantified sentences, exact quantifier-free decisions, and the `theta`
//! value of the square-root graded subgroup.
//!
//! A quantifier ranges over all one-point extensions of the current finite
//! configuration, i.e. over its Katětov functions: every admissible vector
//! is realised in the Urysohn space, and by ultrahomogeneity the value of
//! the body depends only on the resulting finite configuration.

use std::collections::{BTreeMap, BTreeSet};

use num::bigint::BigInt;
use num::{Integer, Signed, ToPrimitive};
use thiserror::Error;

use crate::enclosure::Enclosure;
use crate::formula::{lipschitz, Formula, FormulaError, Signature, SignatureError, Term};
use crate::metric::RationalMetricSpace;
use crate::rational::{
    common_denominator, dot_minus, dot_plus, dot_scale, neg, one, pow2_inv, q, sqrt_bounds, zero, Frac, Rational,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UrysohnError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown constant or point `{0}`")]
    UnknownPoint(String),
    #[error("definition of `{0}` must be quantifier-free and use only `d`")]
    BadDefinition(String),
    #[error("definition of `{0}` uses variables outside its parameters")]
    DefinitionVars(String),
    #[error("mesh must be positive")]
    Mesh,
    #[error("search exceeded {0} nodes")]
    NodeLimit(u64),
    #[error("refinement produced disjoint enclosures (internal error)")]
    Disjoint,
    #[error("q must lie strictly between 1/10 and 1/2, got {0}")]
    ThetaRange(String),
    #[error("tolerance must be positive")]
    Tolerance,
}

/// `R(params) := body`, with `body` quantifier-free over `d` and anchors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationDef {
    pub params: Vec<String>,
    pub body: Formula,
}

/// Finitely many points of the Urysohn space, named as constants, with
/// relations defined from distances to them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchoredStructure {
    anchors: RationalMetricSpace,
    sig: Signature,
    defs: BTreeMap<String, RelationDef>,
}

impl AnchoredStructure {
    /// Anchors only; every anchor is a constant.
    pub fn pure(anchors: RationalMetricSpace) -> Result<Self, UrysohnError> {
        Self::new(anchors, Vec::new())
    }

    pub fn new(anchors: RationalMetricSpace, defs: Vec<(String, RelationDef)>) -> Result<Self, UrysohnError> {
        let mut base = Signature::new();
        for p in anchors.points() {
            base = base.with_constant(p)?;
        }
        let mut sig = base.clone();
        let mut table = BTreeMap::new();
        for (name, def) in defs {
            let qf_metric = def.body.is_quantifier_free() && {
                let mut ok = true;
                def.body.visit(&mut |f| ok &= !matches!(f, Formula::Rel(..)));
                ok
            };
            if !qf_metric {
                return Err(UrysohnError::BadDefinition(name));
            }
            let distinct: BTreeSet<&String> = def.params.iter().collect();
            if distinct.len() != def.params.len() || !def.body.free_vars().iter().all(|v| def.params.contains(v)) {
                return Err(UrysohnError::DefinitionVars(name));
            }
            def.body.check(&base)?;
            let l = lipschitz(&def.body, &base)?;
            let modulus = if l.is_positive() { l } else { one() };
            sig = sig.with_relation_modulus(&name, def.params.len(), modulus)?;
            table.insert(name, def);
        }
        Ok(AnchoredStructure { anchors, sig, defs: table })
    }

    pub fn anchors(&self) -> &RationalMetricSpace {
        &self.anchors
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn defs(&self) -> &BTreeMap<String, RelationDef> {
        &self.defs
    }

    /// Replaces every relation atom by its definition.
    pub fn inline(&self, phi: &Formula) -> Formula {
        use Formula::*;
        let go = |f: &Formula| Box::new(self.inline(f));
        match phi {
            Const(_) | Dist(..) => phi.clone(),
            Rel(name, ts) => {
                let def = &self.defs[name];
                let subst: BTreeMap<&str, &Term> = def.params.iter().map(|p| p.as_str()).zip(ts).collect();
                substitute(&def.body, &subst)
            }
            Half(g) => Half(go(g)),
            Neg(g) => Neg(go(g)),
            Scale(c, g) => Scale(c.clone(), go(g)),
            DotMinus(a, b) => DotMinus(go(a), go(b)),
            DotPlus(a, b) => DotPlus(go(a), go(b)),
            Min(a, b) => Min(go(a), go(b)),
            Max(a, b) => Max(go(a), go(b)),
            AbsDiff(a, b) => AbsDiff(go(a), go(b)),
            Sup(x, g) => Sup(x.clone(), go(g)),
            Inf(x, g) => Inf(x.clone(), go(g)),
        }
    }
}

/// Substitution into a quantifier-free body.
fn substitute(f: &Formula, s: &BTreeMap<&str, &Term>) -> Formula {
    use Formula::*;
    let t = |x: &Term| match x {
        Term::Var(v) => s.get(v.as_str()).map(|t| (*t).clone()).unwrap_or_else(|| x.clone()),
        c => c.clone(),
    };
    let go = |g: &Formula| Box::new(substitute(g, s));
    match f {
        Const(_) => f.clone(),
        Dist(a, b) => Dist(t(a), t(b)),
        Rel(n, ts) => Rel(n.clone(), ts.iter().map(t).collect()),
        Half(g) => Half(go(g)),
        Neg(g) => Neg(go(g)),
        Scale(c, g) => Scale(c.clone(), go(g)),
        DotMinus(a, b) => DotMinus(go(a), go(b)),
        DotPlus(a, b) => DotPlus(go(a), go(b)),
        Min(a, b) => Min(go(a), go(b)),
        Max(a, b) => Max(go(a), go(b)),
        AbsDiff(a, b) => AbsDiff(go(a), go(b)),
        Sup(..) | Inf(..) => unreachable!("definitions are quantifier-free"),
    }
}

/// Grid step and refinement schedule for quantifier search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifierBudget {
    /// Upper bound for the first grid step.
    pub mesh: Rational,
    /// Halvings of the grid step after the first pass.
    pub rounds: usize,
    /// Abort after this many search nodes in a single pass.
    pub node_limit: u64,
}

impl QuantifierBudget {
    pub fn new(mesh: Rational, rounds: usize) -> Self {
        QuantifierBudget { mesh, rounds, node_limit: 50_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrysohnResult {
    /// Intersection of all passes.
    pub enclosure: Enclosure,
    /// Running intersection after each pass (nested by construction).
    pub passes: Vec<Enclosure>,
    /// Each pass on its own, before intersecting.
    pub raw: Vec<Enclosure>,
    /// Grid step of each pass.
    pub steps: Vec<Rational>,
    pub nodes: u64,
}

// ---------------------------------------------------------------- compiled form

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bin {
    DotMinus,
    DotPlus,
    Min,
    Max,
    AbsDiff,
}

/// Formula with terms resolved to point indices: anchors first, then one
/// index per quantifier nesting level.
#[derive(Debug, Clone)]
enum Node {
    Const(Rational),
    Dist(usize, usize),
    Half(Box<Node>),
    Neg(Box<Node>),
    Scale(Rational, Box<Node>),
    Bin(Bin, Box<Node>, Box<Node>),
    Quant(Box<Quant>),
}

#[derive(Debug, Clone)]
struct Quant {
    sup: bool,
    /// Modulus of the body in the new point.
    modulus: Rational,
    body: Node,
}

struct Compiler<'a> {
    anchors: &'a RationalMetricSpace,
    scope: Vec<(String, usize)>,
}

impl Compiler<'_> {
    fn term(&self, t: &Term) -> Result<usize, UrysohnError> {
        match t {
            Term::Var(x) => self
                .scope
                .iter()
                .rev()
                .find(|(k, _)| k == x)
                .map(|&(_, i)| i)
                .ok_or_else(|| UrysohnError::UnboundVariable(x.clone())),
            Term::Const(c) => self.anchors.index_of(c).ok_or_else(|| UrysohnError::UnknownPoint(c.clone())),
        }
    }

    fn compile(&mut self, f: &Formula, depth: usize) -> Result<Node, UrysohnError> {
        use Formula as F;
        let bin = |op, a: Node, b: Node| Node::Bin(op, Box::new(a), Box::new(b));
        Ok(match f {
            F::Const(c) => Node::Const(c.clone()),
            F::Dist(a, b) => Node::Dist(self.term(a)?, self.term(b)?),
            F::Rel(..) => unreachable!("relations are inlined before compiling"),
            F::Half(g) => Node::Half(Box::new(self.compile(g, depth)?)),
            F::Neg(g) => Node::Neg(Box::new(self.compile(g, depth)?)),
            F::Scale(c, g) => Node::Scale(c.clone(), Box::new(self.compile(g, depth)?)),
            F::DotMinus(a, b) => bin(Bin::DotMinus, self.compile(a, depth)?, self.compile(b, depth)?),
            F::DotPlus(a, b) => bin(Bin::DotPlus, self.compile(a, depth)?, self.compile(b, depth)?),
            F::Min(a, b) => bin(Bin::Min, self.compile(a, depth)?, self.compile(b, depth)?),
            F::Max(a, b) => bin(Bin::Max, self.compile(a, depth)?, self.compile(b, depth)?),
            F::AbsDiff(a, b) => bin(Bin::AbsDiff, self.compile(a, depth)?, self.compile(b, depth)?),
            F::Sup(x, g) | F::Inf(x, g) => {
                let point = self.anchors.len() + depth;
                self.scope.push((x.clone(), point));
                let body = self.compile(g, depth + 1);
                self.scope.pop();
                let body = body?;
                let modulus = node_modulus(&body, point);
                Node::Quant(Box::new(Quant { sup: matches!(f, F::Sup(..)), modulus, body }))
            }
        })
    }
}

/// Lipschitz constant of a compiled node when only `point` moves.
fn node_modulus(n: &Node, point: usize) -> Rational {
    match n {
        Node::Const(_) => zero(),
        Node::Dist(i, j) => {
            if i == j {
                zero()
            } else {
                Rational::from_integer(BigInt::from([i, j].iter().filter(|&&&k| k == point).count()))
            }
        }
        Node::Half(g) => node_modulus(g, point) / q(2, 1),
        Node::Neg(g) => node_modulus(g, point),
        Node::Scale(c, g) => c * node_modulus(g, point),
        Node::Bin(Bin::Min | Bin::Max, a, b) => node_modulus(a, point).max(node_modulus(b, point)),
        Node::Bin(_, a, b) => node_modulus(a, point) + node_modulus(b, point),
        Node::Quant(qn) => node_modulus(&qn.body, point),
    }
}

// ---------------------------------------------------------------- interval helpers

type Iv = (Rational, Rational);

fn iv_unary(n: &Node, a: Iv) -> Iv {
    match n {
        Node::Half(_) => (a.0 / q(2, 1), a.1 / q(2, 1)),
        Node::Neg(_) => (neg(&a.1), neg(&a.0)),
        Node::Scale(c, _) => (dot_scale(c, &a.0), dot_scale(c, &a.1)),
        _ => unreachable!(),
    }
}

fn iv_bin(op: Bin, a: Iv, b: Iv) -> Iv {
    match op {
        Bin::DotMinus => (dot_minus(&a.0, &b.1), dot_minus(&a.1, &b.0)),
        Bin::DotPlus => (dot_plus(&a.0, &b.0), dot_plus(&a.1, &b.1)),
        Bin::Min => (a.0.min(b.0), a.1.min(b.1)),
        Bin::Max => (a.0.max(b.0), a.1.max(b.1)),
        Bin::AbsDiff => {
            let lo = dot_minus(&a.0, &b.1).max(dot_minus(&b.0, &a.1));
            let hi = (&a.1 - &b.0).max(&b.1 - &a.0);
            (lo, hi)
        }
    }
}

// ---------------------------------------------------------------- grid search

/// Finite configuration with all distances in units of the grid step.
#[derive(Debug, Clone)]
struct Config {
    dist: Vec<Vec<i64>>,
}

impl Config {
    fn len(&self) -> usize {
        self.dist.len()
    }

    fn extended(&self, f: &[i64]) -> Config {
        let mut dist = self.dist.clone();
        for (row, &v) in dist.iter_mut().zip(f) {
            row.push(v);
        }
        let mut last = f.to_vec();
        last.push(0);
        dist.push(last);
        Config { dist }
    }
}

struct Search {
    n: i64,
    denom: BigInt,
    nodes: u64,
    limit: u64,
}

impl Search {
    fn r(&self, v: i64) -> Rational {
        Rational::new(BigInt::from(v), self.denom.clone())
    }

    fn tick(&mut self) -> Result<(), UrysohnError> {
        self.nodes += 1;
        if self.nodes > self.limit {
            Err(UrysohnError::NodeLimit(self.limit))
        } else {
            Ok(())
        }
    }

    /// Value enclosure when every referenced point is placed.
    fn eval_point(&mut self, n: &Node, c: &Config) -> Result<Iv, UrysohnError> {
        Ok(match n {
            Node::Const(v) => (v.clone(), v.clone()),
            Node::Dist(i, j) => {
                let v = self.r(c.dist[*i][*j]);
                (v.clone(), v)
            }
            Node::Half(g) | Node::Neg(g) | Node::Scale(_, g) => {
                let a = self.eval_point(g, c)?;
                iv_unary(n, a)
            }
            Node::Bin(op, a, b) => {
                let a = self.eval_point(a, c)?;
                let b = self.eval_point(b, c)?;
                iv_bin(*op, a, b)
            }
            Node::Quant(qn) => self.search(qn, c)?,
        })
    }

    /// Enclosure over all placements of the next point inside `bx`; nested
    /// quantifiers are only known to lie in `[0,1]`.
    fn eval_box(&self, n: &Node, c: &Config, bx: &[(i64, i64)]) -> Iv {
        let m = c.len();
        match n {
            Node::Const(v) => (v.clone(), v.clone()),
            Node::Dist(i, j) => {
                let (i, j) = (*i, *j);
                if i == j {
                    (zero(), zero())
                } else if i == m || j == m {
                    let o = if i == m { j } else { i };
                    (self.r(bx[o].0), self.r(bx[o].1))
                } else {
                    let v = self.r(c.dist[i][j]);
                    (v.clone(), v)
                }
            }
            Node::Half(g) | Node::Neg(g) | Node::Scale(_, g) => iv_unary(n, self.eval_box(g, c, bx)),
            Node::Bin(op, a, b) => iv_bin(*op, self.eval_box(a, c, bx), self.eval_box(b, c, bx)),
            Node::Quant(_) => (zero(), one()),
        }
    }

    /// Admissible values for coordinate `j` given the placed coordinates.
    fn feasible(&self, c: &Config, placed: &[i64], j: usize) -> (i64, i64) {
        let mut lo = 0;
        let mut hi = self.n;
        for (i, &f) in placed.iter().enumerate() {
            let d = c.dist[i][j];
            lo = lo.max((f - d).abs());
            hi = hi.min(f + d);
        }
        (lo, hi)
    }

    /// Box for a search node: placed coordinates, a range for the next one,
    /// and relaxed ranges for the rest. `None` when empty.
    fn node_box(&self, c: &Config, placed: &[i64], range: (i64, i64)) -> Option<Vec<(i64, i64)>> {
        let k = placed.len();
        let mut bx: Vec<(i64, i64)> = placed.iter().map(|&f| (f, f)).collect();
        bx.push(range);
        for j in k + 1..c.len() {
            let (mut lo, mut hi) = self.feasible(c, placed, j);
            let d = c.dist[k][j];
            let gap = if d < range.0 {
                range.0 - d
            } else if d > range.1 {
                d - range.1
            } else {
                0
            };
            lo = lo.max(gap);
            hi = hi.min(range.1 + d);
            if lo > hi {
                return None;
            }
            bx.push((lo, hi));
        }
        Some(bx)
    }

    fn search(&mut self, qn: &Quant, c: &Config) -> Result<Iv, UrysohnError> {
        let mut best: Option<Iv> = None;
        if c.len() == 0 {
            let ext = c.extended(&[]);
            best = Some(self.eval_point(&qn.body, &ext)?);
        } else {
            let range = self.feasible(c, &[], 0);
            if let Some(bx) = self.node_box(c, &[], range) {
                let bound = self.eval_box(&qn.body, c, &bx);
                self.explore(qn, c, &mut Vec::new(), range, bound, &mut best)?;
            }
        }
        let (lo, hi) = best.expect("the constant-1 vector is always admissible");
        let slack = &qn.modulus / Rational::from_integer(BigInt::from(self.n));
        Ok(if qn.sup { (lo, (hi + slack).min(one())) } else { ((lo - slack).max(zero()), hi) })
    }

    fn explore(
        &mut self,
        qn: &Quant,
        c: &Config,
        placed: &mut Vec<i64>,
        range: (i64, i64),
        bound: Iv,
        best: &mut Option<Iv>,
    ) -> Result<(), UrysohnError> {
        self.tick()?;
        if let Some(b) = best {
            let useless = if qn.sup { bound.1 <= b.0 } else { bound.0 >= b.1 };
            if useless {
                return Ok(());
            }
        }
        if range.0 == range.1 {
            placed.push(range.0);
            let k = placed.len();
            let out = if k == c.len() {
                let ext = c.extended(placed);
                let v = self.eval_point(&qn.body, &ext)?;
                *best = Some(match best.take() {
                    None => v,
                    Some(b) if qn.sup => (b.0.max(v.0), b.1.max(v.1)),
                    Some(b) => (b.0.min(v.0), b.1.min(v.1)),
                });
                Ok(())
            } else {
                let next = self.feasible(c, placed, k);
                match (next.0 <= next.1).then(|| self.node_box(c, placed, next)).flatten() {
                    Some(bx) => {
                        let bound = self.eval_box(&qn.body, c, &bx);
                        self.explore(qn, c, placed, next, bound, best)
                    }
                    None => Ok(()),
                }
            };
            placed.pop();
            return out;
        }
        let mid = range.0 + (range.1 - range.0) / 2;
        let mut children = Vec::with_capacity(2);
        for r in [(range.0, mid), (mid + 1, range.1)] {
            if let Some(bx) = self.node_box(c, placed, r) {
                children.push((r, self.eval_box(&qn.body, c, &bx)));
            }
        }
        // Most promising half first.
        if children.len() == 2 {
            let swap = if qn.sup { children[1].1 .1 > children[0].1 .1 } else { children[1].1 .0 < children[0].1 .0 };
            if swap {
                children.swap(0, 1);
            }
        }
        for (r, b) in children {
            self.explore(qn, c, placed, r, b, best)?;
        }
        Ok(())
    }
}

/// Encloses the value of `phi` in the Urysohn space with the free variables
/// sent to anchors by `params`.
pub fn eval_urysohn(
    phi: &Formula,
    st: &AnchoredStructure,
    params: &BTreeMap<String, String>,
    budget: &QuantifierBudget,
) -> Result<UrysohnResult, UrysohnError> {
    if !budget.mesh.is_positive() {
        return Err(UrysohnError::Mesh);
    }
    phi.check(&st.sig)?;
    let flat = st.inline(phi);
    let mut compiler = Compiler { anchors: &st.anchors, scope: Vec::new() };
    for (x, p) in params {
        let i = st.anchors.index_of(p).ok_or_else(|| UrysohnError::UnknownPoint(p.clone()))?;
        compiler.scope.push((x.clone(), i));
    }
    let root = compiler.compile(&flat, 0)?;

    // First grid: smallest multiple of the anchors' common denominator
    // whose step is at most the mesh.
    let a = st.anchors.len();
    let lcm = common_denominator((0..a).flat_map(|i| (0..a).map(move |j| (i, j))).map(|(i, j)| st.anchors.d(i, j)));
    let need = (one() / &budget.mesh).ceil().to_integer();
    let mult = Integer::div_ceil(&need, &lcm).max(BigInt::from(1));
    let n0 = (&lcm * mult).to_i64().ok_or(UrysohnError::Mesh)?;

    let mut passes = Vec::new();
    let mut raw = Vec::new();
    let mut steps = Vec::new();
    let mut current: Option<Enclosure> = None;
    let mut nodes = 0;
    for r in 0..=budget.rounds {
        let n = n0.checked_shl(r as u32).filter(|v| *v > 0).ok_or(UrysohnError::Mesh)?;
        let denom = BigInt::from(n);
        let dist = (0..a)
            .map(|i| (0..a).map(|j| (st.anchors.d(i, j) * &denom).to_integer().to_i64().expect("grid fits")).collect())
            .collect();
        let mut search = Search { n, denom, nodes: 0, limit: budget.node_limit };
        let (lo, hi) = search.eval_point(&root, &Config { dist })?;
        nodes += search.nodes;
        let pass = Enclosure::clamped(lo, hi);
        raw.push(pass.clone());
        let next = match current {
            None => pass,
            Some(c) => c.intersect(&pass).ok_or(UrysohnError::Disjoint)?,
        };
        steps.push(Rational::new(BigInt::from(1), BigInt::from(n)));
        passes.push(next.clone());
        current = Some(next);
    }
    Ok(UrysohnResult { enclosure: current.expect("at least one pass"), passes, raw, steps, nodes })
}

// ---------------------------------------------------------------- quantifier-free decisions

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QfError {
    #[error("formula is not quantifier-free")]
    Quantifier,
    #[error("relation `{0}` is not available; only `d` is")]
    Relation(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("free variable `{0}`")]
    FreeVariable(String),
    #[error("constant {0} outside [0,1]")]
    ConstRange(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdDecision {
    pub threshold: Rational,
    pub less: bool,
    pub greater: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QfDecision {
    pub value: Rational,
    pub thresholds: Vec<ThresholdDecision>,
}

/// Exact value of a quantifier-free sentence whose constants name points of
/// `fragment`, plus `<`/`>` decisions against each threshold.
pub fn qf_decide(
    phi: &Formula,
    fragment: &RationalMetricSpace,
    thresholds: &[Rational],
) -> Result<QfDecision, QfError> {
    fn point(t: &Term, s: &RationalMetricSpace) -> Result<usize, QfError> {
        match t {
            Term::Const(c) => s.index_of(c).ok_or_else(|| QfError::UnknownPoint(c.clone())),
            Term::Var(v) => Err(QfError::FreeVariable(v.clone())),
        }
    }
    fn value(f: &Formula, s: &RationalMetricSpace) -> Result<Rational, QfError> {
        use Formula::*;
        Ok(match f {
            Const(v) => {
                if v.is_negative() || *v > one() {
                    return Err(QfError::ConstRange(Frac(v).to_string()));
                }
                v.clone()
            }
            Dist(a, b) => s.d(point(a, s)?, point(b, s)?).clone(),
            Rel(r, _) => return Err(QfError::Relation(r.clone())),
            Half(g) => value(g, s)? / q(2, 1),
            Neg(g) => one() - value(g, s)?,
            Scale(c, g) => (c * value(g, s)?).min(one()),
            DotMinus(a, b) => (value(a, s)? - value(b, s)?).max(zero()),
            DotPlus(a, b) => (value(a, s)? + value(b, s)?).min(one()),
            Min(a, b) => value(a, s)?.min(value(b, s)?),
            Max(a, b) => value(a, s)?.max(value(b, s)?),
            AbsDiff(a, b) => (value(a, s)? - value(b, s)?).abs(),
            Sup(..) | Inf(..) => return Err(QfError::Quantifier),
        })
    }
    if !phi.is_quantifier_free() {
        return Err(QfError::Quantifier);
    }
    let v = value(phi, fragment)?;
    let thresholds =
        thresholds.iter().map(|t| ThresholdDecision { threshold: t.clone(), less: &v < t, greater: &v > t }).collect();
    Ok(QfDecision { value: v, thresholds })
}

// ---------------------------------------------------------------- theta

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaResult {
    pub enclosure: Enclosure,
    /// Sub-intervals of `[0, q]` examined.
    pub intervals: usize,
}

/// Encloses `inf_{0 <= e <= q} min(1, 10(q - e)) ∔ sqrt(e)`, the value of
/// the Δ-transform of `10·d(u0, c)` under `g -> sqrt(d(g u0, u0))` at a
/// structure with `d(u0, c) = q`.
pub fn theta_demo(qv: &Rational, tol: &Rational) -> Result<ThetaResult, UrysohnError> {
    if *qv <= q(1, 10) || *qv >= q(1, 2) {
        return Err(UrysohnError::ThetaRange(Frac(qv).to_string()));
    }
    if !tol.is_positive() {
        return Err(UrysohnError::Tolerance);
    }
    let mut bits = 0;
    while pow2_inv(bits) * q(4, 1) > *tol {
        bits += 1;
    }
    let ten = q(10, 1);
    let linear = |e: &Rational| dot_scale(&ten, &(qv - e));
    let upper = |e: &Rational| dot_plus(&linear(e), &sqrt_bounds(e, bits).1);
    // Both terms are monotone, so the corners bound the whole interval.
    let lower = |a: &Rational, b: &Rational| dot_plus(&linear(b), &sqrt_bounds(a, bits).0);

    let mut best = upper(&zero()).min(upper(qv));
    let mut open: Vec<(Rational, Rational, Rational)> = vec![(zero(), qv.clone(), lower(&zero(), qv))];
    let mut intervals = 1;
    loop {
        open.retain(|(_, _, lb)| *lb < best);
        let Some(pos) = (0..open.len()).min_by(|&i, &j| open[i].2.cmp(&open[j].2)) else {
            // Every interval is bounded below by the best value seen.
            return Ok(ThetaResult { enclosure: Enclosure::clamped(best.clone(), best), intervals });
        };
        let floor = open[pos].2.clone();
        if &best - &floor <= *tol {
            return Ok(ThetaResult { enclosure: Enclosure::clamped(floor, best), intervals });
        }
        let (a, b, _) = open.swap_remove(pos);
        let mid = (&a + &b) / q(2, 1);
        best = best.min(upper(&mid));
        intervals += 2;
        open.push((a.clone(), mid.clone(), lower(&a, &mid)));
        open.push((mid.clone(), b.clone(), lower(&mid, &b)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::metric::space_from_pairs;

    fn run(text: &str, anchors: RationalMetricSpace, mesh: Rational, rounds: usize) -> UrysohnResult {
        let st = AnchoredStructure::pure(anchors).unwrap();
        let phi = parse(text, st.sig()).unwrap();
        eval_urysohn(&phi, &st, &BTreeMap::new(), &QuantifierBudget::new(mesh, rounds)).unwrap()
    }

    #[test]
    fn sup_distance_is_one() {
        let s = RationalMetricSpace::singleton("s");
        let r = run("(sup x (d s x))", s, q(1, 10), 3);
        assert!(r.enclosure.contains(&one()));
        assert!(r.enclosure.width() <= q(1, 1000));
    }

    #[test]
    fn inf_of_max_is_half_distance() {
        let ab = space_from_pairs(&["a", "b"], &[("a", "b", q(3, 5))]).unwrap();
        let r = run("(inf x (max (d a x) (d b x)))", ab, q(1, 10), 7);
        assert!(r.enclosure.contains(&q(3, 10)), "{}", r.enclosure);
        assert!(r.enclosure.width() <= q(1, 1000), "{}", r.enclosure);
        for w in r.passes.windows(2) {
            assert!(w[1].is_within(&w[0]));
        }
    }

    #[test]
    fn constants_are_exact() {
        let s = RationalMetricSpace::singleton("s");
        let r = run("2/7", s, q(1, 3), 2);
        assert_eq!(r.enclosure, Enclosure::point(q(2, 7)));
    }

    #[test]
    fn nested_quantifiers() {
        // Some point sits at distance 1 from any given point.
        let s = RationalMetricSpace::singleton("s");
        let r = run("(inf x (sup y (d x y)))", s, q(1, 4), 1);
        assert!(r.enclosure.contains(&one()));
    }

    #[test]
    fn anchored_predicates_inline() {
        let anchors = space_from_pairs(&["u0", "c"], &[("u0", "c", q(1, 4))]).unwrap();
        let body = parse("(d x u0)", &AnchoredStructure::pure(anchors.clone()).unwrap().sig().clone()).unwrap();
        let st = AnchoredStructure::new(anchors, vec![("R".into(), RelationDef { params: vec!["x".into()], body })])
            .unwrap();
        let phi = parse("(inf y (max (R y) (d y c)))", st.sig()).unwrap();
        let r = eval_urysohn(&phi, &st, &BTreeMap::new(), &QuantifierBudget::new(q(1, 8), 2)).unwrap();
        assert!(r.enclosure.contains(&q(1, 8)));
    }

    #[test]
    fn qf_examples() {
        let s = space_from_pairs(&["s", "t", "u"], &[("s", "t", q(1, 2)), ("t", "u", q(3, 4)), ("s", "u", q(1, 2))])
            .unwrap();
        let sig = AnchoredStructure::pure(s.clone()).unwrap().sig().clone();
        let v = |t: &str| qf_decide(&parse(t, &sig).unwrap(), &s, &[q(1, 2)]).unwrap();
        assert_eq!(v("(d s s)").value, zero());
        assert_eq!(v("(dotminus (d s t) (d t u))").value, zero());
        let d = v("(neg (d s t))");
        assert_eq!(d.value, q(1, 2));
        assert!(!d.thresholds[0].less && !d.thresholds[0].greater);
    }

    #[test]
    fn theta_examples() {
        let tol = q(1, 1_000_000);
        let r = theta_demo(&q(1, 4), &tol).unwrap();
        assert!(r.enclosure.contains(&q(1, 2)));
        assert!(r.enclosure.width() <= tol);
        assert!(theta_demo(&q(49, 100), &tol).unwrap().enclosure.contains(&q(7, 10)));
        assert!(matches!(theta_demo(&q(1, 20), &tol), Err(UrysohnError::ThetaRange(_))));
    }
}
