//! Finite metric structures: exact evaluation, the weighted structure
//! metric, `Mod` membership and a bounded separable-categoricity probe.

use std::collections::BTreeMap;

use itertools::Itertools;
use num::Signed;
use thiserror::Error;

use crate::enclosure::Enclosure;
use crate::formula::{Comparison, Formula, Signature, Term};
use crate::metric::RationalMetricSpace;
use crate::rational::{dot_minus, dot_plus, dot_scale, in_unit, neg, pow2_inv, q, zero, Frac, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("no table for relation `{0}`")]
    MissingTable(String),
    #[error("table for `{relation}` has {found} entries, expected {expected}")]
    TableSize { relation: String, expected: usize, found: usize },
    #[error("table `{0}` is not a relation of the signature")]
    ExtraTable(String),
    #[error("value {value} of {relation}{tuple:?} outside [0,1]")]
    Range { relation: String, tuple: Vec<String>, value: String },
    #[error("{relation} breaks its modulus between {a:?} and {b:?}")]
    Modulus { relation: String, a: Vec<String>, b: Vec<String> },
    #[error("constant `{0}` is not interpreted")]
    MissingConstant(String),
    #[error("`{0}` is not a constant of the signature")]
    UnknownConstant(String),
    #[error("constant `{0}` points outside the space")]
    ConstantPoint(String),
}

/// A signature interpreted on a finite rational metric space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    space: RationalMetricSpace,
    sig: Signature,
    /// Row-major over tuples: `(t_1, ..., t_k)` sits at `sum t_i n^(k-i)`.
    tables: BTreeMap<String, Vec<Rational>>,
    consts: BTreeMap<String, usize>,
}

/// All `k`-tuples over `0..n` in lexicographic order.
pub fn tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = if k == 0 { 1 } else { n.pow(k as u32) };
    (0..total).map(move |mut idx| {
        let mut t = vec![0; k];
        for slot in t.iter_mut().rev() {
            *slot = idx % n.max(1);
            idx /= n.max(1);
        }
        t
    })
}

fn tuple_index(n: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &t| acc * n + t)
}

impl FiniteStructure {
    /// Checks totality, range and modulus compliance.
    pub fn new(
        space: RationalMetricSpace,
        sig: Signature,
        tables: BTreeMap<String, Vec<Rational>>,
        consts: BTreeMap<String, usize>,
    ) -> Result<Self, StructureError> {
        let m = Self::new_unchecked_modulus(space, sig, tables, consts)?;
        if let Some(v) = m.modulus_violations().into_iter().next() {
            return Err(v);
        }
        Ok(m)
    }

    /// Like [`FiniteStructure::new`] but tolerates relations that break
    /// their declared modulus.
    pub fn new_unchecked_modulus(
        space: RationalMetricSpace,
        sig: Signature,
        tables: BTreeMap<String, Vec<Rational>>,
        consts: BTreeMap<String, usize>,
    ) -> Result<Self, StructureError> {
        let n = space.len();
        for name in tables.keys() {
            if sig.relation(name).is_none() {
                return Err(StructureError::ExtraTable(name.clone()));
            }
        }
        for r in sig.relations() {
            let t = tables.get(&r.name).ok_or_else(|| StructureError::MissingTable(r.name.clone()))?;
            let expected = n.pow(r.arity as u32);
            if t.len() != expected {
                return Err(StructureError::TableSize { relation: r.name.clone(), expected, found: t.len() });
            }
            for tuple in tuples(n, r.arity) {
                let v = &t[tuple_index(n, &tuple)];
                if !in_unit(v) {
                    return Err(StructureError::Range {
                        relation: r.name.clone(),
                        tuple: tuple.iter().map(|&i| space.name(i).to_string()).collect(),
                        value: Frac(v).to_string(),
                    });
                }
            }
        }
        for (c, &p) in &consts {
            if !sig.is_constant(c) {
                return Err(StructureError::UnknownConstant(c.clone()));
            }
            if p >= n {
                return Err(StructureError::ConstantPoint(c.clone()));
            }
        }
        for c in sig.constants() {
            if !consts.contains_key(c) {
                return Err(StructureError::MissingConstant(c.clone()));
            }
        }
        Ok(FiniteStructure { space, sig, tables, consts })
    }

    /// Builds tables from a value function over point-index tuples.
    pub fn from_fn(
        space: RationalMetricSpace,
        sig: Signature,
        consts: BTreeMap<String, usize>,
        mut value: impl FnMut(&str, &[usize]) -> Rational,
    ) -> Result<Self, StructureError> {
        let n = space.len();
        let tables = sig
            .relations()
            .iter()
            .map(|r| (r.name.clone(), tuples(n, r.arity).map(|t| value(&r.name, &t)).collect()))
            .collect();
        Self::new(space, sig, tables, consts)
    }

    /// The space with no relations and no constants.
    pub fn pure(space: RationalMetricSpace) -> Self {
        FiniteStructure { space, sig: Signature::new(), tables: BTreeMap::new(), consts: BTreeMap::new() }
    }

    pub fn space(&self) -> &RationalMetricSpace {
        &self.space
    }

    pub fn sig(&self) -> &Signature {
        &self.sig
    }

    pub fn consts(&self) -> &BTreeMap<String, usize> {
        &self.consts
    }

    pub fn tables(&self) -> &BTreeMap<String, Vec<Rational>> {
        &self.tables
    }

    pub fn rel(&self, name: &str, tuple: &[usize]) -> Option<&Rational> {
        self.tables.get(name).map(|t| &t[tuple_index(self.space.len(), tuple)])
    }

    /// Every pair of tuples where some relation moves by more than its
    /// modulus times the max displacement.
    pub fn modulus_violations(&self) -> Vec<StructureError> {
        let n = self.space.len();
        let mut out = Vec::new();
        for r in self.sig.relations() {
            let all: Vec<Vec<usize>> = tuples(n, r.arity).collect();
            for (i, a) in all.iter().enumerate() {
                for b in &all[i + 1..] {
                    let disp = a.iter().zip(b).map(|(&x, &y)| self.space.d(x, y).clone()).max().expect("arity >= 1");
                    let gap = (self.rel(&r.name, a).unwrap() - self.rel(&r.name, b).unwrap()).abs();
                    if gap > &r.modulus * disp {
                        let names = |t: &[usize]| t.iter().map(|&i| self.space.name(i).to_string()).collect();
                        out.push(StructureError::Modulus { relation: r.name.clone(), a: names(a), b: names(b) });
                    }
                }
            }
        }
        out
    }

    /// The same structure on a space re-labelled by a permutation: the new
    /// structure `g(M)` has `R^{g(M)}(g x) = R^M(x)`, constants moved to
    /// `g(c)`, and the original distances (so `g` should be an isometry).
    pub fn transport(&self, perm: &[usize]) -> Self {
        let n = self.space.len();
        let mut inv = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        let tables = self
            .sig
            .relations()
            .iter()
            .map(|r| {
                let t = tuples(n, r.arity)
                    .map(|y| {
                        let x: Vec<usize> = y.iter().map(|&i| inv[i]).collect();
                        self.rel(&r.name, &x).unwrap().clone()
                    })
                    .collect();
                (r.name.clone(), t)
            })
            .collect();
        let consts = self.consts.iter().map(|(c, &p)| (c.clone(), perm[p])).collect();
        FiniteStructure { space: self.space.clone(), sig: self.sig.clone(), tables, consts }
    }

    /// True when the permutation preserves distances, relations and
    /// constants.
    pub fn is_automorphism(&self, perm: &[usize]) -> bool {
        let n = self.space.len();
        let isometric = (0..n).all(|i| (0..n).all(|j| self.space.d(perm[i], perm[j]) == self.space.d(i, j)));
        isometric
            && self.consts.values().all(|&p| perm[p] == p)
            && self.sig.relations().iter().all(|r| {
                tuples(n, r.arity).all(|t| {
                    let img: Vec<usize> = t.iter().map(|&i| perm[i]).collect();
                    self.rel(&r.name, &t) == self.rel(&r.name, &img)
                })
            })
    }

    /// Automorphisms in lexicographic order, identity first.
    pub fn automorphisms(&self) -> Vec<Vec<usize>> {
        self.space.isometries().into_iter().filter(|p| self.is_automorphism(p)).collect()
    }
}

// ---------------------------------------------------------------- evaluation

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{name}` expects {expected} arguments, got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("constant {0} outside [0,1]")]
    ConstRange(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
}

pub type Assignment = BTreeMap<String, usize>;

/// Exact value of `phi` in `m` under `assignment`; quantifiers range over
/// all points.
pub fn eval(phi: &Formula, m: &FiniteStructure, assignment: &Assignment) -> Result<Rational, EvalError> {
    let mut env: Vec<(String, usize)> = assignment.iter().map(|(k, &v)| (k.clone(), v)).collect();
    eval_in(phi, m, &mut env)
}

/// Convenience: assignment given by point names.
pub fn eval_named(phi: &Formula, m: &FiniteStructure, assignment: &[(&str, &str)]) -> Result<Rational, EvalError> {
    let mut a = Assignment::new();
    for (x, p) in assignment {
        let i = m.space.index_of(p).ok_or_else(|| EvalError::UnknownPoint(p.to_string()))?;
        a.insert(x.to_string(), i);
    }
    eval(phi, m, &a)
}

fn lookup(t: &Term, m: &FiniteStructure, env: &[(String, usize)]) -> Result<usize, EvalError> {
    match t {
        Term::Var(x) => {
            env.iter().rev().find(|(k, _)| k == x).map(|&(_, v)| v).ok_or_else(|| EvalError::UnboundVariable(x.clone()))
        }
        Term::Const(c) => m.consts.get(c).copied().ok_or_else(|| EvalError::UnknownConstant(c.clone())),
    }
}

fn eval_in(phi: &Formula, m: &FiniteStructure, env: &mut Vec<(String, usize)>) -> Result<Rational, EvalError> {
    use Formula::*;
    Ok(match phi {
        Const(v) => {
            if !in_unit(v) {
                return Err(EvalError::ConstRange(Frac(v).to_string()));
            }
            v.clone()
        }
        Dist(a, b) => m.space.d(lookup(a, m, env)?, lookup(b, m, env)?).clone(),
        Rel(name, ts) => {
            let r = m.sig.relation(name).ok_or_else(|| EvalError::UnknownRelation(name.clone()))?;
            if r.arity != ts.len() {
                return Err(EvalError::Arity { name: name.clone(), expected: r.arity, found: ts.len() });
            }
            let tuple = ts.iter().map(|t| lookup(t, m, env)).collect::<Result<Vec<_>, _>>()?;
            m.rel(name, &tuple).expect("tables are total").clone()
        }
        Half(g) => eval_in(g, m, env)? / q(2, 1),
        Neg(g) => neg(&eval_in(g, m, env)?),
        Scale(c, g) => dot_scale(c, &eval_in(g, m, env)?),
        DotMinus(a, b) => dot_minus(&eval_in(a, m, env)?, &eval_in(b, m, env)?),
        DotPlus(a, b) => dot_plus(&eval_in(a, m, env)?, &eval_in(b, m, env)?),
        Min(a, b) => eval_in(a, m, env)?.min(eval_in(b, m, env)?),
        Max(a, b) => eval_in(a, m, env)?.max(eval_in(b, m, env)?),
        AbsDiff(a, b) => (eval_in(a, m, env)? - eval_in(b, m, env)?).abs(),
        Sup(x, g) | Inf(x, g) => {
            let is_sup = matches!(phi, Sup(..));
            let mut best: Option<Rational> = None;
            for p in 0..m.space.len() {
                env.push((x.clone(), p));
                let v = eval_in(g, m, env);
                env.pop();
                let v = v?;
                best = Some(match best {
                    None => v,
                    Some(b) if is_sup => b.max(v),
                    Some(b) => b.min(v),
                });
            }
            best.expect("spaces are non-empty")
        }
    })
}

/// Decides `eval(phi) cmp eps` exactly.
pub fn mod_member(
    m: &FiniteStructure,
    phi: &Formula,
    assignment: &Assignment,
    eps: &Rational,
    cmp: Comparison,
) -> Result<bool, EvalError> {
    let v = eval(phi, m, assignment)?;
    Ok(match cmp {
        Comparison::LessThan => &v < eps,
        Comparison::GreaterThan => &v > eps,
    })
}

// ---------------------------------------------------------------- structure metric

/// One entry `(R_j, s)` of the tuple enumeration behind the structure metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleRef {
    pub relation: String,
    pub tuple: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeltaError {
    #[error("structures live on different spaces or signatures")]
    Mismatch,
    #[error("truncation {k} exceeds the {len} enumerated tuples")]
    Truncation { k: usize, len: usize },
    #[error("enumeration entry {0} does not fit the signature")]
    BadEntry(usize),
}

/// Relations in signature order, tuples lexicographic within each.
pub fn default_enumeration(sig: &Signature, n: usize) -> Vec<TupleRef> {
    sig.relations()
        .iter()
        .flat_map(|r| tuples(n, r.arity).map(move |t| TupleRef { relation: r.name.clone(), tuple: t }))
        .collect()
}

/// `[S_k, S_k + 2^-k]` where `S_k = sum_{i<=k} 2^-i |R^M(s_i) - R^N(s_i)|`.
pub fn delta_seq(
    m: &FiniteStructure,
    n: &FiniteStructure,
    enumeration: &[TupleRef],
    k: usize,
) -> Result<Enclosure, DeltaError> {
    if m.space != n.space || m.sig != n.sig {
        return Err(DeltaError::Mismatch);
    }
    if k > enumeration.len() {
        return Err(DeltaError::Truncation { k, len: enumeration.len() });
    }
    let mut sum = zero();
    for (i, e) in enumeration[..k].iter().enumerate() {
        let fits = m.sig.relation(&e.relation).is_some_and(|r| r.arity == e.tuple.len())
            && e.tuple.iter().all(|&p| p < m.space.len());
        if !fits {
            return Err(DeltaError::BadEntry(i + 1));
        }
        let gap = (m.rel(&e.relation, &e.tuple).unwrap() - n.rel(&e.relation, &e.tuple).unwrap()).abs();
        sum += pow2_inv(i + 1) * gap;
    }
    let hi = &sum + pow2_inv(k);
    Ok(Enclosure::new(sum, hi).expect("partial sums stay below 1 - 2^-k"))
}

// ---------------------------------------------------------------- sc probe

/// `formula <= bound`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub formula: Formula,
    pub bound: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScOutcome {
    /// Conditions covering all n-tuples, each passing the extension clause.
    Witness(Vec<Condition>),
    /// No admissible cover. `tuple` is left uncovered; when some condition
    /// covering it fails the clause, the failure is spelled out.
    Counterexample { tuple: Vec<usize>, failure: Option<ClauseFailure> },
    /// The cover search ran out of budget after `examined` families.
    Inconclusive { examined: usize },
}

/// The condition, a tuple realising it, and a realised set `delta` of
/// `(n+1)`-conditions with no realisation within `eps` of the tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseFailure {
    pub condition: Condition,
    pub tuple: Vec<usize>,
    pub delta: Vec<Condition>,
}

#[derive(Debug, Clone)]
pub struct ScProbe<'a> {
    pub structure: &'a FiniteStructure,
    /// Names of `x_1 .. x_{n+1}`; conditions use only the first `n`.
    pub vars: Vec<String>,
    pub eps: Rational,
    pub pool: Vec<Formula>,
    /// Largest number of pool formulas in a `delta` set.
    pub depth: usize,
    /// Maximal number of candidate families examined.
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScProbeError {
    #[error("need n >= 1 tuple variables plus one extension variable")]
    Vars,
    #[error("pool formula `{0}` uses variables outside the probe's tuple")]
    PoolVars(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The probe's variables `x1 .. x{n+1}`.
pub fn standard_vars(n: usize) -> Vec<String> {
    (1..=n + 1).map(|i| format!("x{i}")).collect()
}

impl ScProbe<'_> {
    fn value(&self, phi: &Formula, tuple: &[usize]) -> Result<Rational, EvalError> {
        let a: Assignment = self.vars.iter().cloned().zip(tuple.iter().copied()).collect();
        eval(phi, self.structure, &a)
    }

    fn max_disp(&self, a: &[usize], b: &[usize]) -> Rational {
        a.iter().zip(b).map(|(&x, &y)| self.structure.space.d(x, y).clone()).max().unwrap_or_else(zero)
    }

    /// Runs the probe: minimal families first, in pool/threshold order.
    pub fn run(&self) -> Result<ScOutcome, ScProbeError> {
        if self.vars.len() < 2 {
            return Err(ScProbeError::Vars);
        }
        let n = self.vars.len() - 1;
        let size = self.structure.space.len();
        for phi in &self.pool {
            if !phi.free_vars().iter().all(|v| self.vars.contains(v)) {
                return Err(ScProbeError::PoolVars(phi.to_string()));
            }
        }
        let short: Vec<&Formula> =
            self.pool.iter().filter(|phi| phi.free_vars().iter().all(|v| self.vars[..n].contains(v))).collect();
        let n_tuples: Vec<Vec<usize>> = tuples(size, n).collect();

        // Candidate conditions with the tuples they cover.
        let mut candidates: Vec<(Condition, Vec<bool>)> = Vec::new();
        for phi in &short {
            let values: Vec<Rational> = n_tuples.iter().map(|t| self.value(phi, t)).collect::<Result<_, _>>()?;
            let mut thresholds = values.clone();
            thresholds.sort();
            thresholds.dedup();
            for bound in thresholds {
                let covered = values.iter().map(|v| v <= &bound).collect();
                candidates.push((Condition { formula: (*phi).clone(), bound }, covered));
            }
        }

        let mut failures: Vec<Option<ClauseFailure>> = Vec::with_capacity(candidates.len());
        for (c, covered) in &candidates {
            failures.push(self.clause_failure(c, covered, &n_tuples)?);
        }
        let good: Vec<usize> = (0..candidates.len()).filter(|&i| failures[i].is_none()).collect();

        let covers = |family: &[usize]| (0..n_tuples.len()).all(|t| family.iter().any(|&i| candidates[i].1[t]));
        if covers(&good) {
            let mut examined = 0;
            for k in 1..=good.len() {
                for family in good.iter().copied().combinations(k) {
                    if examined >= self.budget {
                        return Ok(ScOutcome::Inconclusive { examined });
                    }
                    examined += 1;
                    if covers(&family) {
                        return Ok(ScOutcome::Witness(family.iter().map(|&i| candidates[i].0.clone()).collect()));
                    }
                }
            }
            unreachable!("the full family covers");
        }
        let t = (0..n_tuples.len()).find(|&t| !good.iter().any(|&i| candidates[i].1[t])).expect("some tuple uncovered");
        let failure = (0..candidates.len()).filter(|&i| candidates[i].1[t]).find_map(|i| failures[i].clone());
        Ok(ScOutcome::Counterexample { tuple: n_tuples[t].clone(), failure })
    }

    /// Checks the extension clause of one condition. `delta` sets are the
    /// diagrams `{psi <= psi(c)}` of realising `(n+1)`-tuples over pool
    /// subsets of size `min(depth, |pool|)`; smaller subsets are implied.
    fn clause_failure(
        &self,
        cond: &Condition,
        covered: &[bool],
        n_tuples: &[Vec<usize>],
    ) -> Result<Option<ClauseFailure>, EvalError> {
        let size = self.structure.space.len();
        let n = self.vars.len() - 1;
        let long: Vec<Vec<usize>> = tuples(size, n + 1).collect();
        // Values of every pool formula and of the condition on all (n+1)-tuples.
        let table: Vec<Vec<Rational>> = self
            .pool
            .iter()
            .map(|phi| long.iter().map(|t| self.value(phi, t)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        let cond_ok: Vec<bool> =
            long.iter().map(|t| self.value(&cond.formula, t).map(|v| v <= cond.bound)).collect::<Result<_, _>>()?;
        let width = self.depth.min(self.pool.len());
        let subsets: Vec<Vec<usize>> = (0..self.pool.len()).combinations(width).collect();
        for (ai, a) in n_tuples.iter().enumerate() {
            if !covered[ai] {
                continue;
            }
            for (ci, _) in long.iter().enumerate().filter(|(ci, _)| cond_ok[*ci]) {
                for subset in &subsets {
                    let realised = long.iter().enumerate().any(|(bi, b)| {
                        cond_ok[bi]
                            && subset.iter().all(|&p| table[p][bi] <= table[p][ci])
                            && self.max_disp(a, &b[..n]) < self.eps
                    });
                    if !realised {
                        let delta = subset
                            .iter()
                            .map(|&p| Condition { formula: self.pool[p].clone(), bound: table[p][ci].clone() })
                            .collect();
                        return Ok(Some(ClauseFailure { condition: cond.clone(), tuple: a.clone(), delta }));
                    }
                }
            }
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::build::dot_plus as f_dot_plus;
    use crate::formula::build::{dist, konst, neg, sup, var};
    use crate::formula::parse;
    use crate::metric::space_from_pairs;
    use crate::rational::one;

    fn two_points(d: Rational) -> RationalMetricSpace {
        space_from_pairs(&["a", "b"], &[("a", "b", d)]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let m = FiniteStructure::pure(two_points(q(1, 2)));
        let none = Assignment::new();
        assert_eq!(eval(&neg(konst(one())), &m, &none).unwrap(), zero());
        assert_eq!(eval_named(&sup("x", dist(var("a"), var("x"))), &m, &[("a", "a")]).unwrap(), q(1, 2));
        assert_eq!(eval(&f_dot_plus(konst(q(3, 4)), konst(q(1, 2))), &m, &none).unwrap(), one());
        assert_eq!(eval(&dist(var("z"), var("z")), &m, &none), Err(EvalError::UnboundVariable("z".into())));
    }

    #[test]
    fn structure_checks() {
        let sig = Signature::new().with_relation("R", 1).unwrap();
        let sp = two_points(q(1, 4));
        let mut t = BTreeMap::new();
        t.insert("R".to_string(), vec![q(0, 1), q(1, 2)]);
        let err = FiniteStructure::new(sp.clone(), sig.clone(), t.clone(), BTreeMap::new()).unwrap_err();
        assert!(matches!(err, StructureError::Modulus { .. }));
        assert!(FiniteStructure::new_unchecked_modulus(sp.clone(), sig.clone(), t, BTreeMap::new()).is_ok());
        let mut t = BTreeMap::new();
        t.insert("R".to_string(), vec![q(0, 1)]);
        assert!(matches!(FiniteStructure::new(sp, sig, t, BTreeMap::new()), Err(StructureError::TableSize { .. })));
    }

    #[test]
    fn mod_member_examples() {
        let m = FiniteStructure::pure(two_points(q(3, 10)));
        let none = Assignment::new();
        let lt = Comparison::LessThan;
        assert!(mod_member(&m, &konst(zero()), &none, &q(1, 2), lt).unwrap());
        assert!(!mod_member(&m, &konst(q(1, 2)), &none, &q(1, 2), lt).unwrap());
        let a: Assignment = [("x".to_string(), 0), ("y".to_string(), 1)].into();
        assert!(mod_member(&m, &dist(var("x"), var("y")), &a, &q(1, 4), Comparison::GreaterThan).unwrap());
    }

    fn unary(space: RationalMetricSpace, vals: Vec<Rational>) -> FiniteStructure {
        let sig = Signature::new().with_relation("R", 1).unwrap();
        let mut t = BTreeMap::new();
        t.insert("R".to_string(), vals);
        FiniteStructure::new(space, sig, t, BTreeMap::new()).unwrap()
    }

    #[test]
    fn delta_seq_examples() {
        let sp = two_points(q(1, 1));
        let m = unary(sp.clone(), vec![q(1, 2), q(1, 2)]);
        let n = unary(sp, vec![q(0, 1), q(1, 2)]);
        let e = default_enumeration(m.sig(), 2);
        assert_eq!(delta_seq(&m, &m, &e, 2).unwrap(), Enclosure::new(zero(), q(1, 4)).unwrap());
        assert_eq!(*delta_seq(&m, &n, &e, 1).unwrap().lo(), q(1, 4));
        assert_eq!(*delta_seq(&m, &n, &e, 2).unwrap().lo(), q(1, 4));
        assert_eq!(delta_seq(&m, &n, &e, 0).unwrap(), Enclosure::new(zero(), one()).unwrap());
        assert!(matches!(delta_seq(&m, &n, &e, 3), Err(DeltaError::Truncation { .. })));
    }

    #[test]
    fn sc_probe_examples() {
        let m = FiniteStructure::pure(two_points(one()));
        let probe = |m: &FiniteStructure, pool: Vec<Formula>, eps: Rational| {
            ScProbe { structure: m, vars: standard_vars(1), eps, pool, depth: 2, budget: 10_000 }.run().unwrap()
        };
        assert_eq!(
            probe(&m, vec![konst(zero())], q(1, 2)),
            ScOutcome::Witness(vec![Condition { formula: konst(zero()), bound: zero() }])
        );
        assert!(matches!(probe(&m, vec![], q(1, 2)), ScOutcome::Counterexample { failure: None, .. }));

        // p and r are close, s is far from both.
        let sp =
            space_from_pairs(&["p", "r", "s"], &[("p", "r", q(1, 10)), ("p", "s", q(9, 10)), ("r", "s", q(9, 10))])
                .unwrap();
        let sig = Signature::new().with_constant("p").unwrap().with_constant("r").unwrap().with_constant("s").unwrap();
        let consts = [("p".to_string(), 0), ("r".to_string(), 1), ("s".to_string(), 2)].into();
        let m = FiniteStructure::new(sp, sig.clone(), BTreeMap::new(), consts).unwrap();
        let pool: Vec<Formula> = ["(d x1 p)", "(d x1 r)", "(d x1 s)"].iter().map(|t| parse(t, &sig).unwrap()).collect();
        let ScOutcome::Witness(family) = probe(&m, pool, q(1, 5)) else { panic!("expected a witness") };
        assert_eq!(family.len(), 2);
        let groups: Vec<Vec<usize>> = family
            .iter()
            .map(|c| {
                (0..3).filter(|&i| eval(&c.formula, &m, &[("x1".to_string(), i)].into()).unwrap() <= c.bound).collect()
            })
            .collect();
        assert!(groups.contains(&vec![0, 1]));
        assert!(groups.contains(&vec![2]));
    }
}
