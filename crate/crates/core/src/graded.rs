//! Graded subgroups and cosets of isometry groups, evaluated on partial
//! isometries of finite rational spaces.

use std::collections::BTreeMap;
use std::fmt;

use num::Signed;
use thiserror::Error;

use crate::enclosure::Enclosure;
use crate::finite::{delta_seq, eval, tuples, Assignment, DeltaError, EvalError, FiniteStructure, TupleRef};
use crate::formula::{lipschitz, Formula, FormulaError};
use crate::metric::RationalMetricSpace;
use crate::rational::{dot_scale, exact_sqrt, one, pow2_inv, sqrt_bounds, zero, Frac, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GradedError {
    #[error("map does not preserve d({a}, {b})")]
    NotIsometric { a: String, b: String },
    #[error("map is not injective at `{0}`")]
    NotInjective(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("partial isometry undefined at `{0}`")]
    Undefined(String),
    #[error("base and shift tuples differ in length")]
    TupleLength,
    #[error("scale factor must be positive")]
    Scale,
    #[error("descriptor is a coset, not a subgroup")]
    NotSubgroup,
    #[error("sample is not an automorphism of the structure")]
    NotAutomorphism,
    #[error("invariance checks need a signature without constants")]
    Constants,
    #[error("truncation {k} exceeds the enumeration of {len} points")]
    Truncation { k: usize, len: usize },
    #[error("enumeration repeats `{0}`")]
    Enumeration(String),
    #[error("{what} too large: {size} > {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
}

// ---------------------------------------------------------------- partial isometries

/// An injective, distance-preserving map between points of one space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialIsometry {
    map: BTreeMap<usize, usize>,
}

impl PartialIsometry {
    pub fn new(
        space: &RationalMetricSpace,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GradedError> {
        let map: BTreeMap<usize, usize> = pairs.into_iter().collect();
        let mut seen = std::collections::BTreeSet::new();
        for (&x, &y) in &map {
            if x >= space.len() || y >= space.len() {
                return Err(GradedError::UnknownPoint(format!("#{}", x.max(y))));
            }
            if !seen.insert(y) {
                return Err(GradedError::NotInjective(space.name(y).into()));
            }
        }
        for (&x, &gx) in &map {
            for (&y, &gy) in map.range(x + 1..) {
                if space.d(gx, gy) != space.d(x, y) {
                    return Err(GradedError::NotIsometric { a: space.name(x).into(), b: space.name(y).into() });
                }
            }
        }
        Ok(PartialIsometry { map })
    }

    pub fn from_names(space: &RationalMetricSpace, pairs: &[(&str, &str)]) -> Result<Self, GradedError> {
        let idx = |p: &str| space.index_of(p).ok_or_else(|| GradedError::UnknownPoint(p.into()));
        let pairs = pairs.iter().map(|(a, b)| Ok((idx(a)?, idx(b)?))).collect::<Result<Vec<_>, GradedError>>()?;
        Self::new(space, pairs)
    }

    /// A total permutation, assumed to be an isometry (checked).
    pub fn from_perm(space: &RationalMetricSpace, perm: &[usize]) -> Result<Self, GradedError> {
        Self::new(space, perm.iter().copied().enumerate())
    }

    pub fn identity(space: &RationalMetricSpace) -> Self {
        PartialIsometry { map: (0..space.len()).map(|i| (i, i)).collect() }
    }

    pub fn apply(&self, x: usize) -> Option<usize> {
        self.map.get(&x).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.map.iter().map(|(&a, &b)| (a, b))
    }

    pub fn inverse(&self) -> Self {
        PartialIsometry { map: self.map.iter().map(|(&a, &b)| (b, a)).collect() }
    }

    /// `self ∘ other`, defined where `other(x)` lies in the domain of `self`.
    pub fn compose(&self, other: &PartialIsometry) -> Self {
        PartialIsometry { map: other.map.iter().filter_map(|(&x, y)| self.apply(*y).map(|z| (x, z))).collect() }
    }

    /// Total permutation when the domain is the whole space.
    pub fn as_perm(&self, n: usize) -> Option<Vec<usize>> {
        (0..n).map(|i| self.apply(i)).collect()
    }
}

// ---------------------------------------------------------------- descriptors

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradedKind {
    Linear,
    Sqrt,
}

/// `g -> q · d(g(base), shift)` (or `q · sqrt(...)`), dotted, with `d` the
/// max metric on tuples; `Max` takes the pointwise maximum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GradedDescriptor {
    Basic { kind: GradedKind, scale: Rational, base: Vec<String>, shift: Vec<String> },
    Max(Vec<GradedDescriptor>),
}

impl GradedDescriptor {
    /// The subgroup `H_{q, base}`.
    pub fn subgroup(kind: GradedKind, scale: Rational, base: &[&str]) -> Self {
        let base: Vec<String> = base.iter().map(|s| s.to_string()).collect();
        GradedDescriptor::Basic { kind, scale, shift: base.clone(), base }
    }

    pub fn is_subgroup(&self) -> bool {
        match self {
            GradedDescriptor::Basic { base, shift, .. } => base == shift,
            GradedDescriptor::Max(parts) => parts.iter().all(|p| p.is_subgroup()),
        }
    }

    /// All points the descriptor reads (base and shift).
    pub fn points(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_points(&mut out);
        out
    }

    fn collect_points(&self, out: &mut Vec<String>) {
        match self {
            GradedDescriptor::Basic { base, shift, .. } => {
                for p in base.iter().chain(shift) {
                    if !out.contains(p) {
                        out.push(p.clone());
                    }
                }
            }
            GradedDescriptor::Max(parts) => parts.iter().for_each(|p| p.collect_points(out)),
        }
    }

    pub fn base_points(&self) -> Vec<String> {
        match self {
            GradedDescriptor::Basic { base, .. } => base.clone(),
            GradedDescriptor::Max(parts) => {
                let mut out: Vec<String> = Vec::new();
                for p in parts {
                    for b in p.base_points() {
                        if !out.contains(&b) {
                            out.push(b);
                        }
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for GradedDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradedDescriptor::Basic { kind, scale, base, shift } => {
                let k = match kind {
                    GradedKind::Linear => "linear",
                    GradedKind::Sqrt => "sqrt",
                };
                write!(f, "graded {k} {} [{}] -> [{}]", Frac(scale), base.join(" "), shift.join(" "))
            }
            GradedDescriptor::Max(parts) => {
                write!(f, "max{{")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// A graded value `sqrt(square)` with `square` in `[0, 1]`; linear values
/// are stored squared so that all comparisons stay exact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GradedValue {
    square: Rational,
}

impl GradedValue {
    pub fn from_rational(v: &Rational) -> Self {
        GradedValue { square: v * v }
    }

    pub fn square(&self) -> &Rational {
        &self.square
    }

    pub fn exact(&self) -> Option<Rational> {
        exact_sqrt(&self.square)
    }

    pub fn enclosure(&self, bits: usize) -> Enclosure {
        let (lo, hi) = sqrt_bounds(&self.square, bits);
        Enclosure::clamped(lo, hi)
    }

    pub fn is_zero(&self) -> bool {
        self.square == zero()
    }

    /// `self <= min(1, a + b)`, decided exactly.
    pub fn le_dot_sum(&self, a: &GradedValue, b: &GradedValue) -> bool {
        // sqrt(A) <= sqrt(B) + sqrt(C)  <=>  A-B-C <= 0  or  (A-B-C)^2 <= 4BC;
        // the cap is harmless since A <= 1.
        let t = &self.square - &a.square - &b.square;
        !t.is_positive() || &t * &t <= Rational::from_integer(4.into()) * &a.square * &b.square
    }

    /// `self < r` for a rational `r`.
    pub fn lt(&self, r: &Rational) -> bool {
        r.is_positive() && self.square < r * r
    }

    /// `self <= r` for a rational `r`.
    pub fn le(&self, r: &Rational) -> bool {
        !r.is_negative() && self.square <= r * r
    }
}

impl fmt::Display for GradedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact() {
            Some(v) => write!(f, "{}", Frac(&v)),
            None => write!(f, "sqrt({})", Frac(&self.square)),
        }
    }
}

fn tuple_indices(space: &RationalMetricSpace, names: &[String]) -> Result<Vec<usize>, GradedError> {
    names.iter().map(|p| space.index_of(p).ok_or_else(|| GradedError::UnknownPoint(p.clone()))).collect()
}

/// Exact value of `desc` at `g`.
pub fn graded_eval(
    desc: &GradedDescriptor,
    g: &PartialIsometry,
    space: &RationalMetricSpace,
) -> Result<GradedValue, GradedError> {
    match desc {
        GradedDescriptor::Basic { kind, scale, base, shift } => {
            if base.len() != shift.len() {
                return Err(GradedError::TupleLength);
            }
            if !scale.is_positive() {
                return Err(GradedError::Scale);
            }
            let b = tuple_indices(space, base)?;
            let s = tuple_indices(space, shift)?;
            let mut m = zero();
            for (&x, &y) in b.iter().zip(&s) {
                let gx = g.apply(x).ok_or_else(|| GradedError::Undefined(space.name(x).into()))?;
                m = m.max(space.d(gx, y).clone());
            }
            Ok(match kind {
                GradedKind::Linear => GradedValue::from_rational(&dot_scale(scale, &m)),
                GradedKind::Sqrt => GradedValue { square: (scale * scale * m).min(one()) },
            })
        }
        GradedDescriptor::Max(parts) => {
            let mut best = GradedValue { square: zero() };
            for p in parts {
                best = best.max(graded_eval(p, g, space)?);
            }
            Ok(best)
        }
    }
}

// ---------------------------------------------------------------- axioms

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomFailure {
    Identity { value: String },
    Symmetry { g: PartialIsometry, value: String, inverse_value: String },
    Subadditivity { g: PartialIsometry, h: PartialIsometry, product: String, bound: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AxiomReport {
    pub checked: usize,
    pub failures: Vec<AxiomFailure>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `H(1) = 0`, `H(g) = H(g⁻¹)` and `H(gh) <= H(g) ∔ H(h)` on every
/// supplied pair. Each pair must be composable on the descriptor's points.
pub fn check_graded_axioms(
    desc: &GradedDescriptor,
    space: &RationalMetricSpace,
    pairs: &[(PartialIsometry, PartialIsometry)],
) -> Result<AxiomReport, GradedError> {
    if !desc.is_subgroup() {
        return Err(GradedError::NotSubgroup);
    }
    let mut report = AxiomReport::default();
    let id = graded_eval(desc, &PartialIsometry::identity(space), space)?;
    report.checked += 1;
    if !id.is_zero() {
        report.failures.push(AxiomFailure::Identity { value: id.to_string() });
    }
    let mut seen_single = std::collections::BTreeSet::new();
    for (g, h) in pairs {
        for x in [g, h] {
            if seen_single.insert(x.clone()) {
                let a = graded_eval(desc, x, space)?;
                let b = graded_eval(desc, &x.inverse(), space)?;
                report.checked += 1;
                if a != b {
                    report.failures.push(AxiomFailure::Symmetry {
                        g: x.clone(),
                        value: a.to_string(),
                        inverse_value: b.to_string(),
                    });
                }
            }
        }
        let gh = g.compose(h);
        let product = graded_eval(desc, &gh, space)?;
        let (a, b) = (graded_eval(desc, g, space)?, graded_eval(desc, h, space)?);
        report.checked += 1;
        if !product.le_dot_sum(&a, &b) {
            report.failures.push(AxiomFailure::Subadditivity {
                g: g.clone(),
                h: h.clone(),
                product: product.to_string(),
                bound: format!("{a} + {b}"),
            });
        }
    }
    Ok(report)
}

/// Every isometry of the space, as partial isometries.
pub fn isometry_group(space: &RationalMetricSpace) -> Vec<PartialIsometry> {
    space.isometries().into_iter().map(|p| PartialIsometry { map: p.into_iter().enumerate().collect() }).collect()
}

// ---------------------------------------------------------------- rho_S

/// An injective enumeration `s_1, s_2, ...` of points, weighted by `2^-i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupMetricContext {
    enumeration: Vec<usize>,
}

impl GroupMetricContext {
    pub fn new(space: &RationalMetricSpace, enumeration: Vec<usize>) -> Result<Self, GradedError> {
        let mut seen = std::collections::BTreeSet::new();
        for &p in &enumeration {
            if p >= space.len() {
                return Err(GradedError::UnknownPoint(format!("#{p}")));
            }
            if !seen.insert(p) {
                return Err(GradedError::Enumeration(space.name(p).into()));
            }
        }
        Ok(GroupMetricContext { enumeration })
    }

    /// Points in their stored order.
    pub fn all(space: &RationalMetricSpace) -> Self {
        GroupMetricContext { enumeration: (0..space.len()).collect() }
    }

    pub fn enumeration(&self) -> &[usize] {
        &self.enumeration
    }
}

/// `[S_k, S_k + 2^-k]` with `S_k = sum_{i<=k} 2^-i min(1, d(g s_i, h s_i))`.
pub fn rho_s(
    g: &PartialIsometry,
    h: &PartialIsometry,
    ctx: &GroupMetricContext,
    space: &RationalMetricSpace,
    k: usize,
) -> Result<Enclosure, GradedError> {
    if k > ctx.enumeration.len() {
        return Err(GradedError::Truncation { k, len: ctx.enumeration.len() });
    }
    let mut sum = zero();
    for (i, &s) in ctx.enumeration[..k].iter().enumerate() {
        let undefined = || GradedError::Undefined(space.name(s).into());
        let (gs, hs) = (g.apply(s).ok_or_else(undefined)?, h.apply(s).ok_or_else(undefined)?);
        sum += pow2_inv(i + 1) * space.d(gs, hs).clone().min(one());
    }
    let hi = &sum + pow2_inv(k);
    Ok(Enclosure::new(sum, hi).expect("weights sum below one"))
}

// ---------------------------------------------------------------- formula invariance

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvarianceMode {
    /// Samples are isometries of the underlying space; `g(M)` is the
    /// transported structure.
    Isometries,
    /// Samples must also preserve every relation.
    Automorphisms,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceFailure {
    pub g: PartialIsometry,
    pub gap: Rational,
    pub bound: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvarianceReport {
    /// Modulus `δ` used for `H_{δ, c}`.
    pub modulus: Rational,
    pub checked: usize,
    pub max_gap: Rational,
    pub failures: Vec<InvarianceFailure>,
}

/// Checks `|φ^{g(M)}(c) - φ^M(c)| <= H_{δ,c}(g)` with `δ = lipschitz(φ)`.
pub fn check_formula_invariance(
    phi: &Formula,
    params: &Assignment,
    m: &FiniteStructure,
    samples: &[PartialIsometry],
    mode: InvarianceMode,
) -> Result<InvarianceReport, GradedError> {
    if !m.sig().constants().is_empty() {
        return Err(GradedError::Constants);
    }
    let delta = lipschitz(phi, m.sig())?;
    let base = eval(phi, m, params)?;
    let c: Vec<usize> = params.values().copied().collect();
    let n = m.space().len();
    let mut report = InvarianceReport { modulus: delta.clone(), checked: 0, max_gap: zero(), failures: Vec::new() };
    for g in samples {
        let perm = g.as_perm(n).ok_or_else(|| {
            let missing = (0..n).find(|&i| g.apply(i).is_none()).unwrap_or(0);
            GradedError::Undefined(m.space().name(missing).into())
        })?;
        PartialIsometry::from_perm(m.space(), &perm)?;
        if mode == InvarianceMode::Automorphisms && !m.is_automorphism(&perm) {
            return Err(GradedError::NotAutomorphism);
        }
        let moved = eval(phi, &m.transport(&perm), params)?;
        let gap = (&moved - &base).abs();
        let disp = c.iter().map(|&x| m.space().d(perm[x], x).clone()).max().unwrap_or_else(zero);
        let bound = dot_scale(&delta, &disp);
        report.checked += 1;
        if gap > report.max_gap {
            report.max_gap = gap.clone();
        }
        if gap > bound {
            report.failures.push(InvarianceFailure { g: g.clone(), gap, bound });
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------- approximation search

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum ApproxOutcome {
    Found {
        g: PartialIsometry,
        h_value: GradedValue,
        distance: Enclosure,
        examined: usize,
    },
    /// `exhausted` is true when every isometry was examined.
    NotFound {
        examined: usize,
        exhausted: bool,
    },
}

/// Looks for an isometry `g` of the shared space with `H(g) < eps` and the
/// certified upper bound of `δ_seq(g(N), M)` below `eps`, in lexicographic
/// isometry order.
#[allow(clippy::too_many_arguments)]
pub fn approx_search(
    m: &FiniteStructure,
    n: &FiniteStructure,
    h: &GradedDescriptor,
    eps: &Rational,
    budget: usize,
    enumeration: &[TupleRef],
    k: usize,
) -> Result<ApproxOutcome, GradedError> {
    if m.space() != n.space() || m.sig() != n.sig() {
        return Err(DeltaError::Mismatch.into());
    }
    let space = m.space();
    let mut examined = 0;
    let group = space.isometries();
    let total = group.len();
    for perm in group {
        if examined >= budget {
            return Ok(ApproxOutcome::NotFound { examined, exhausted: false });
        }
        examined += 1;
        let g = PartialIsometry::from_perm(space, &perm)?;
        let value = graded_eval(h, &g, space)?;
        if !value.lt(eps) {
            continue;
        }
        let distance = delta_seq(&n.transport(&perm), m, enumeration, k)?;
        if distance.hi() < eps {
            return Ok(ApproxOutcome::Found { g, h_value: value, distance, examined });
        }
    }
    Ok(ApproxOutcome::NotFound { examined, exhausted: examined == total })
}

// ---------------------------------------------------------------- approximate oligomorphy

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OligoResult {
    /// Representatives, one per chosen orbit.
    pub family: Vec<Vec<usize>>,
    pub orbits: usize,
    pub group_order: usize,
    /// For every n-tuple: the family member whose orbit comes within `eps`,
    /// and the orbit element used.
    pub certificate: Vec<(Vec<usize>, usize, Vec<usize>)>,
}

/// Smallest family `F` of n-tuples with `Aut(M)·F` eps-dense in `M^n`
/// (max metric, distance `<= eps`).
pub fn oligo_probe(m: &FiniteStructure, n: usize, eps: &Rational, limit: usize) -> Result<OligoResult, GradedError> {
    let size = m.space().len();
    let count = size.checked_pow(n as u32).unwrap_or(usize::MAX);
    if count > limit {
        return Err(GradedError::TooLarge { what: "tuple space", size: count, limit });
    }
    let group = m.automorphisms();
    let all: Vec<Vec<usize>> = tuples(size, n).collect();
    let index = |t: &[usize]| t.iter().fold(0, |acc, &x| acc * size + x);
    // Orbits in order of their least tuple.
    let mut orbit_of = vec![usize::MAX; all.len()];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for (i, t) in all.iter().enumerate() {
        if orbit_of[i] != usize::MAX {
            continue;
        }
        let id = orbits.len();
        let mut members = Vec::new();
        for g in &group {
            let img: Vec<usize> = t.iter().map(|&x| g[x]).collect();
            let j = index(&img);
            if orbit_of[j] == usize::MAX {
                orbit_of[j] = id;
                members.push(j);
            }
        }
        members.sort();
        orbits.push(members);
    }
    if orbits.len() > 24 {
        return Err(GradedError::TooLarge { what: "orbit count", size: orbits.len(), limit: 24 });
    }
    let near = |a: &[usize], b: &[usize]| a.iter().zip(b).all(|(&x, &y)| m.space().d(x, y) <= eps);
    // covers[o][t]: some member of orbit o is within eps of tuple t.
    let covers: Vec<Vec<Option<usize>>> = orbits
        .iter()
        .map(|members| all.iter().map(|t| members.iter().copied().find(|&j| near(t, &all[j]))).collect())
        .collect();
    for k in 1..=orbits.len() {
        for chosen in itertools::Itertools::combinations(0..orbits.len(), k) {
            if (0..all.len()).all(|t| chosen.iter().any(|&o| covers[o][t].is_some())) {
                let family = chosen.iter().map(|&o| all[orbits[o][0]].clone()).collect();
                let certificate = (0..all.len())
                    .map(|t| {
                        let (pos, j) = chosen
                            .iter()
                            .enumerate()
                            .find_map(|(pos, &o)| covers[o][t].map(|j| (pos, j)))
                            .expect("covered");
                        (all[t].clone(), pos, all[j].clone())
                    })
                    .collect();
                return Ok(OligoResult { family, orbits: orbits.len(), group_order: group.len(), certificate });
            }
        }
    }
    unreachable!("all orbits together cover every tuple")
}
