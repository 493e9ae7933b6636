//! Continuous-logic formulas: AST, s-expression syntax, linear moduli and
//! Borel levels of `Mod` sets.

use std::collections::BTreeSet;
use std::fmt;

use num::Signed;
use thiserror::Error;

use crate::rational::{in_unit, parse_rational, Frac, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
    /// Linear inverse continuity modulus w.r.t. the max metric on tuples.
    pub modulus: Rational,
}

/// A relational signature; the distance symbol `d` is implicit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    relations: Vec<RelationSymbol>,
    constants: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("duplicate symbol `{0}`")]
    Duplicate(String),
    #[error("relation `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("relation `{0}` needs a positive modulus coefficient")]
    Modulus(String),
    #[error("`{0}` is reserved")]
    Reserved(String),
}

const KEYWORDS: [&str; 12] =
    ["d", "half", "dotminus", "min", "max", "absdiff", "neg", "dotplus", "scale", "sup", "inf", ""];

fn is_reserved(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a relation with the default modulus `arity * id`.
    pub fn with_relation(self, name: &str, arity: usize) -> Result<Self, SignatureError> {
        self.with_relation_modulus(name, arity, Rational::from_integer(arity.into()))
    }

    pub fn with_relation_modulus(
        mut self,
        name: &str,
        arity: usize,
        modulus: Rational,
    ) -> Result<Self, SignatureError> {
        self.check_fresh(name)?;
        if arity == 0 {
            return Err(SignatureError::ZeroArity(name.into()));
        }
        if !modulus.is_positive() {
            return Err(SignatureError::Modulus(name.into()));
        }
        self.relations.push(RelationSymbol { name: name.into(), arity, modulus });
        Ok(self)
    }

    pub fn with_constant(mut self, name: &str) -> Result<Self, SignatureError> {
        self.check_fresh(name)?;
        self.constants.push(name.into());
        Ok(self)
    }

    fn check_fresh(&self, name: &str) -> Result<(), SignatureError> {
        if is_reserved(name) || name.contains(['(', ')']) || name.chars().any(char::is_whitespace) {
            return Err(SignatureError::Reserved(name.into()));
        }
        if self.relation(name).is_some() || self.is_constant(name) {
            return Err(SignatureError::Duplicate(name.into()));
        }
        Ok(())
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn relation(&self, name: &str) -> Option<&RelationSymbol> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.iter().any(|c| c == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn name(&self) -> &str {
        match self {
            Term::Var(s) | Term::Const(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    Const(Rational),
    Dist(Term, Term),
    Rel(String, Vec<Term>),
    Half(Box<Formula>),
    DotMinus(Box<Formula>, Box<Formula>),
    Min(Box<Formula>, Box<Formula>),
    Max(Box<Formula>, Box<Formula>),
    AbsDiff(Box<Formula>, Box<Formula>),
    Neg(Box<Formula>),
    DotPlus(Box<Formula>, Box<Formula>),
    Scale(Rational, Box<Formula>),
    Sup(String, Box<Formula>),
    Inf(String, Box<Formula>),
}

/// Small constructors, mostly for tests and generators.
pub mod build {
    use super::{Formula, Term};
    use crate::rational::Rational;

    pub fn var(x: &str) -> Term {
        Term::Var(x.into())
    }
    pub fn cst(c: &str) -> Term {
        Term::Const(c.into())
    }
    pub fn konst(q: Rational) -> Formula {
        Formula::Const(q)
    }
    pub fn dist(a: Term, b: Term) -> Formula {
        Formula::Dist(a, b)
    }
    pub fn rel(name: &str, args: Vec<Term>) -> Formula {
        Formula::Rel(name.into(), args)
    }
    pub fn neg(f: Formula) -> Formula {
        Formula::Neg(Box::new(f))
    }
    pub fn half(f: Formula) -> Formula {
        Formula::Half(Box::new(f))
    }
    pub fn scale(q: Rational, f: Formula) -> Formula {
        Formula::Scale(q, Box::new(f))
    }
    pub fn min(a: Formula, b: Formula) -> Formula {
        Formula::Min(Box::new(a), Box::new(b))
    }
    pub fn max(a: Formula, b: Formula) -> Formula {
        Formula::Max(Box::new(a), Box::new(b))
    }
    pub fn dot_minus(a: Formula, b: Formula) -> Formula {
        Formula::DotMinus(Box::new(a), Box::new(b))
    }
    pub fn dot_plus(a: Formula, b: Formula) -> Formula {
        Formula::DotPlus(Box::new(a), Box::new(b))
    }
    pub fn abs_diff(a: Formula, b: Formula) -> Formula {
        Formula::AbsDiff(Box::new(a), Box::new(b))
    }
    pub fn sup(x: &str, f: Formula) -> Formula {
        Formula::Sup(x.into(), Box::new(f))
    }
    pub fn inf(x: &str, f: Formula) -> Formula {
        Formula::Inf(x.into(), Box::new(f))
    }
}

impl Formula {
    /// Free variables in sorted order.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut term = |t: &Term, bound: &Vec<String>| {
            if let Term::Var(x) = t {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
        };
        match self {
            Formula::Const(_) => {}
            Formula::Dist(a, b) => {
                term(a, bound);
                term(b, bound);
            }
            Formula::Rel(_, ts) => ts.iter().for_each(|t| term(t, bound)),
            Formula::Half(f) | Formula::Neg(f) | Formula::Scale(_, f) => f.collect_free(bound, out),
            Formula::DotMinus(a, b)
            | Formula::Min(a, b)
            | Formula::Max(a, b)
            | Formula::AbsDiff(a, b)
            | Formula::DotPlus(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Sup(x, f) | Formula::Inf(x, f) => {
                bound.push(x.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            for t in terms_of(f) {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Const(_) | Formula::Dist(..) | Formula::Rel(..) => {}
            Formula::Half(g) | Formula::Neg(g) | Formula::Scale(_, g) | Formula::Sup(_, g) | Formula::Inf(_, g) => {
                g.visit(f)
            }
            Formula::DotMinus(a, b)
            | Formula::Min(a, b)
            | Formula::Max(a, b)
            | Formula::AbsDiff(a, b)
            | Formula::DotPlus(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        let mut qf = true;
        self.visit(&mut |f| {
            if matches!(f, Formula::Sup(..) | Formula::Inf(..)) {
                qf = false;
            }
        });
        qf
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Const(_) | Formula::Dist(..) | Formula::Rel(..) => 0,
            Formula::Half(g) | Formula::Neg(g) | Formula::Scale(_, g) => g.quantifier_depth(),
            Formula::DotMinus(a, b)
            | Formula::Min(a, b)
            | Formula::Max(a, b)
            | Formula::AbsDiff(a, b)
            | Formula::DotPlus(a, b) => a.quantifier_depth().max(b.quantifier_depth()),
            Formula::Sup(_, g) | Formula::Inf(_, g) => 1 + g.quantifier_depth(),
        }
    }

    /// Checks relation names and arities against `sig`.
    pub fn check(&self, sig: &Signature) -> Result<(), FormulaError> {
        let mut err = None;
        self.visit(&mut |f| {
            if err.is_some() {
                return;
            }
            match f {
                Formula::Rel(name, ts) => match sig.relation(name) {
                    None => err = Some(FormulaError::UnknownRelation(name.clone())),
                    Some(r) if r.arity != ts.len() => {
                        err = Some(FormulaError::Arity { name: name.clone(), expected: r.arity, found: ts.len() })
                    }
                    _ => {}
                },
                Formula::Const(q) if !in_unit(q) => err = Some(FormulaError::ConstRange(Frac(q).to_string())),
                Formula::Scale(q, _) if !q.is_positive() => err = Some(FormulaError::Scale(Frac(q).to_string())),
                _ => {}
            }
            for t in terms_of(f) {
                if let Term::Const(c) = t {
                    if !sig.is_constant(c) && err.is_none() {
                        err = Some(FormulaError::UnknownConstant(c.clone()));
                    }
                }
            }
        });
        err.map_or(Ok(()), Err)
    }
}

fn terms_of(f: &Formula) -> Vec<&Term> {
    match f {
        Formula::Dist(a, b) => vec![a, b],
        Formula::Rel(_, ts) => ts.iter().collect(),
        _ => vec![],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("relation `{name}` expects {expected} arguments, got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("constant {0} outside [0,1]")]
    ConstRange(String),
    #[error("scale factor {0} must be positive")]
    Scale(String),
}

// ---------------------------------------------------------------- syntax

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{name}` expects {expected} arguments, got {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("rational {0} outside [0,1]")]
    Range(String),
    #[error("scale factor {0} must be positive")]
    Scale(String),
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn pos(&self) -> usize {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn syntax(pos: usize, msg: &str) -> ParseError {
    ParseError { pos, kind: ParseErrorKind::Syntax(msg.into()) }
}

fn read_sexp(text: &str) -> Result<Sexp, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '(' || c == ')' {
            tokens.push((c.to_string(), i));
            chars.next();
        } else {
            let mut end = i;
            while let Some(&(j, c)) = chars.peek() {
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                end = j + c.len_utf8();
                chars.next();
            }
            tokens.push((text[i..end].to_string(), i));
        }
    }
    let mut pos = 0;
    let sexp = read_one(&tokens, &mut pos, text.len())?;
    if pos < tokens.len() {
        return Err(syntax(tokens[pos].1, "trailing input"));
    }
    Ok(sexp)
}

fn read_one(tokens: &[(String, usize)], pos: &mut usize, end: usize) -> Result<Sexp, ParseError> {
    let Some((tok, at)) = tokens.get(*pos) else {
        return Err(syntax(end, "unexpected end of input"));
    };
    *pos += 1;
    match tok.as_str() {
        ")" => Err(syntax(*at, "unexpected `)`")),
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(syntax(end, "unclosed `(`")),
                    Some((t, _)) if t == ")" => {
                        *pos += 1;
                        return Ok(Sexp::List(items, *at));
                    }
                    Some(_) => items.push(read_one(tokens, pos, end)?),
                }
            }
        }
        _ => Ok(Sexp::Atom(tok.clone(), *at)),
    }
}

fn looks_numeric(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_digit() || c == '-')
}

/// Parses the prefix syntax; identifiers that are not constants of `sig`
/// are variables.
pub fn parse(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    let sexp = read_sexp(text)?;
    to_formula(&sexp, sig)
}

/// Extends `base` with every relation the text applies that `base` lacks,
/// at the arity of its first use and modulus 1.
pub fn infer_signature(text: &str, base: &Signature) -> Result<Signature, ParseError> {
    fn walk(s: &Sexp, sig: &mut Signature) -> Result<(), ParseError> {
        let Sexp::List(items, pos) = s else { return Ok(()) };
        if let Some(Sexp::Atom(head, _)) = items.first() {
            if !is_reserved(head) && !looks_numeric(head) && sig.relation(head).is_none() {
                let next = std::mem::take(sig).with_relation(head, items.len() - 1);
                *sig = next.map_err(|e| syntax(*pos, &e.to_string()))?;
            }
        }
        items.iter().try_for_each(|i| walk(i, sig))
    }
    let mut sig = base.clone();
    walk(&read_sexp(text)?, &mut sig)?;
    Ok(sig)
}

fn parse_q(s: &str, pos: usize) -> Result<Rational, ParseError> {
    parse_rational(s).map_err(|e| syntax(pos, &e.to_string()))
}

fn to_term(s: &Sexp, sig: &Signature) -> Result<Term, ParseError> {
    match s {
        Sexp::List(_, p) => Err(syntax(*p, "expected a variable or constant")),
        Sexp::Atom(a, p) => {
            if looks_numeric(a) || is_reserved(a) || sig.relation(a).is_some() {
                Err(syntax(*p, &format!("`{a}` is not a term")))
            } else if sig.is_constant(a) {
                Ok(Term::Const(a.clone()))
            } else {
                Ok(Term::Var(a.clone()))
            }
        }
    }
}

fn to_formula(s: &Sexp, sig: &Signature) -> Result<Formula, ParseError> {
    let (items, pos) = match s {
        Sexp::Atom(a, p) => {
            if looks_numeric(a) {
                let q = parse_q(a, *p)?;
                if !in_unit(&q) {
                    return Err(ParseError { pos: *p, kind: ParseErrorKind::Range(Frac(&q).to_string()) });
                }
                return Ok(Formula::Const(q));
            }
            return Err(ParseError { pos: *p, kind: ParseErrorKind::UnknownSymbol(a.clone()) });
        }
        Sexp::List(items, p) => (items, *p),
    };
    let Some(Sexp::Atom(head, head_pos)) = items.first() else {
        return Err(syntax(pos, "expected an operator after `(`"));
    };
    let args = &items[1..];
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(ParseError { pos, kind: ParseErrorKind::Arity { name: head.clone(), expected: n, found: args.len() } })
        }
    };
    let sub = |i: usize| to_formula(&args[i], sig).map(Box::new);
    let binder = |s: &Sexp| match s {
        Sexp::Atom(x, p)
            if !looks_numeric(x) && !is_reserved(x) && !sig.is_constant(x) && sig.relation(x).is_none() =>
        {
            let _ = p;
            Ok(x.clone())
        }
        other => Err(syntax(other.pos(), "expected a variable to bind")),
    };
    Ok(match head.as_str() {
        "d" => {
            arity(2)?;
            Formula::Dist(to_term(&args[0], sig)?, to_term(&args[1], sig)?)
        }
        "half" => {
            arity(1)?;
            Formula::Half(sub(0)?)
        }
        "neg" => {
            arity(1)?;
            Formula::Neg(sub(0)?)
        }
        "dotminus" | "min" | "max" | "absdiff" | "dotplus" => {
            arity(2)?;
            let (a, b) = (sub(0)?, sub(1)?);
            match head.as_str() {
                "dotminus" => Formula::DotMinus(a, b),
                "min" => Formula::Min(a, b),
                "max" => Formula::Max(a, b),
                "absdiff" => Formula::AbsDiff(a, b),
                _ => Formula::DotPlus(a, b),
            }
        }
        "scale" => {
            arity(2)?;
            let Sexp::Atom(qs, qp) = &args[0] else {
                return Err(syntax(args[0].pos(), "expected a rational scale factor"));
            };
            let q = parse_q(qs, *qp)?;
            if !q.is_positive() {
                return Err(ParseError { pos: *qp, kind: ParseErrorKind::Scale(Frac(&q).to_string()) });
            }
            Formula::Scale(q, sub(1)?)
        }
        "sup" | "inf" => {
            arity(2)?;
            let x = binder(&args[0])?;
            let body = sub(1)?;
            if head == "sup" {
                Formula::Sup(x, body)
            } else {
                Formula::Inf(x, body)
            }
        }
        name => match sig.relation(name) {
            Some(r) => {
                arity(r.arity)?;
                Formula::Rel(name.into(), args.iter().map(|a| to_term(a, sig)).collect::<Result<_, _>>()?)
            }
            None => {
                return Err(ParseError { pos: *head_pos, kind: ParseErrorKind::UnknownSymbol(name.into()) });
            }
        },
    })
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Const(q) => write!(f, "{}", Frac(q)),
            Formula::Dist(a, b) => write!(f, "(d {} {})", a.name(), b.name()),
            Formula::Rel(r, ts) => {
                write!(f, "({r}")?;
                for t in ts {
                    write!(f, " {}", t.name())?;
                }
                write!(f, ")")
            }
            Formula::Half(g) => write!(f, "(half {g})"),
            Formula::Neg(g) => write!(f, "(neg {g})"),
            Formula::Scale(q, g) => write!(f, "(scale {} {g})", Frac(q)),
            Formula::DotMinus(a, b) => write!(f, "(dotminus {a} {b})"),
            Formula::Min(a, b) => write!(f, "(min {a} {b})"),
            Formula::Max(a, b) => write!(f, "(max {a} {b})"),
            Formula::AbsDiff(a, b) => write!(f, "(absdiff {a} {b})"),
            Formula::DotPlus(a, b) => write!(f, "(dotplus {a} {b})"),
            Formula::Sup(x, g) => write!(f, "(sup {x} {g})"),
            Formula::Inf(x, g) => write!(f, "(inf {x} {g})"),
        }
    }
}

// ---------------------------------------------------------------- moduli

/// Linear modulus: `|phi(a) - phi(b)| <= L * max_i d(a_i, b_i)` over the
/// free variables, constants held fixed.
pub fn lipschitz(phi: &Formula, sig: &Signature) -> Result<Rational, FormulaError> {
    phi.check(sig)?;
    Ok(modulus(phi, sig, &phi.free_vars()))
}

/// Modulus when only the variables in `moving` are displaced. Quantifiers
/// take their variable out of `moving`: both sides range over the same
/// witnesses.
fn modulus(phi: &Formula, sig: &Signature, moving: &BTreeSet<String>) -> Rational {
    use Formula::*;
    let moves = |t: &Term| matches!(t, Term::Var(x) if moving.contains(x));
    match phi {
        Const(_) => Rational::from_integer(0.into()),
        Dist(a, b) => {
            if a == b {
                return Rational::from_integer(0.into());
            }
            let n = [a, b].into_iter().filter(|t| moves(t)).count();
            Rational::from_integer(n.into())
        }
        Rel(name, ts) => {
            if ts.iter().any(moves) {
                sig.relation(name).expect("checked").modulus.clone()
            } else {
                Rational::from_integer(0.into())
            }
        }
        Half(g) => modulus(g, sig, moving) / Rational::from_integer(2.into()),
        Neg(g) => modulus(g, sig, moving),
        Scale(q, g) => q * modulus(g, sig, moving),
        Sup(x, g) | Inf(x, g) => {
            let mut inner = moving.clone();
            inner.remove(x);
            modulus(g, sig, &inner)
        }
        Min(a, b) | Max(a, b) => modulus(a, sig, moving).max(modulus(b, sig, moving)),
        DotMinus(a, b) | AbsDiff(a, b) | DotPlus(a, b) => modulus(a, sig, moving) + modulus(b, sig, moving),
    }
}

// ---------------------------------------------------------------- Borel levels

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    LessThan,
    GreaterThan,
}

impl Comparison {
    pub fn dual(self) -> Self {
        match self {
            Comparison::LessThan => Comparison::GreaterThan,
            Comparison::GreaterThan => Comparison::LessThan,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    Sigma,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BorelLevel {
    pub kind: ClassKind,
    pub index: usize,
}

impl fmt::Display for BorelLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            ClassKind::Sigma => "Sigma",
            ClassKind::Pi => "Pi",
        };
        write!(f, "{k} {}", self.index)
    }
}

/// Level of `Mod(phi, a, cmp eps)` given by the inductive argument: atomic
/// `<` sets are open, `>` sets one class up; negation swaps the comparison;
/// connectives take the worst child in the comparison each argument is
/// used with (the subtracted side of `dotminus` and both sides of `absdiff`
/// enter with the opposite comparison too); `inf` under `<` and `sup` under
/// `>` are countable unions and keep the class, while `sup` under `<` and
/// `inf` under `>` go one class up.
pub fn borel_level(phi: &Formula, cmp: Comparison) -> BorelLevel {
    let (lt, gt) = levels(phi);
    let index = match cmp {
        Comparison::LessThan => lt,
        Comparison::GreaterThan => gt,
    };
    BorelLevel { kind: ClassKind::Sigma, index }
}

/// `(level under <, level under >)`
fn levels(phi: &Formula) -> (usize, usize) {
    use Formula::*;
    match phi {
        Const(_) => (1, 1),
        Dist(..) | Rel(..) => (1, 2),
        Neg(g) => {
            let (lt, gt) = levels(g);
            (gt, lt)
        }
        Half(g) | Scale(_, g) => levels(g),
        Min(a, b) | Max(a, b) | DotPlus(a, b) => {
            let ((al, ag), (bl, bg)) = (levels(a), levels(b));
            (al.max(bl), ag.max(bg))
        }
        DotMinus(a, b) => {
            let ((al, ag), (bl, bg)) = (levels(a), levels(b));
            (al.max(bg), ag.max(bl))
        }
        AbsDiff(a, b) => {
            let ((al, ag), (bl, bg)) = (levels(a), levels(b));
            let m = al.max(ag).max(bl).max(bg);
            (m, m)
        }
        Inf(_, g) => {
            let (lt, gt) = levels(g);
            (lt, gt + 1)
        }
        Sup(_, g) => {
            let (lt, gt) = levels(g);
            (lt + 1, gt)
        }
    }
}
