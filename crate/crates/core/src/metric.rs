//! Finite metric spaces with exact rational distances bounded by 1.
//!
//! Besides validation this module provides the three constructions used to
//! grow such spaces: Katětov one-point extensions, the amalgamation that
//! places a perturbed copy `B` of a tuple `A` at a prescribed uniform
//! displacement, and a budgeted enumerator approximating the rational
//! Urysohn space from a seed.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num::{Signed, Zero};
use thiserror::Error;

use crate::rational::{fmt_rational, in_unit, one, q, zero, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Shape {
        rows: usize,
        expected: usize,
    },
    DuplicatePoint(String),
    Range {
        a: String,
        b: String,
        value: Rational,
    },
    Diagonal {
        a: String,
        value: Rational,
    },
    Asymmetry {
        a: String,
        b: String,
    },
    /// `d(a,c) > d(a,b) + d(b,c)`: the long side is `a`-`c`, `b` is the
    /// point the shortcut goes through.
    Triangle {
        a: String,
        b: String,
        c: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { rows, expected } => {
                write!(f, "table shape: row of length {rows}, expected {expected}")
            }
            Violation::DuplicatePoint(p) => write!(f, "duplicate point {p}"),
            Violation::Range { a, b, value } => {
                write!(f, "range: d({a},{b}) = {} outside [0,1]", fmt_rational(value))
            }
            Violation::Diagonal { a, value } => {
                write!(f, "diagonal: d({a},{a}) = {}", fmt_rational(value))
            }
            Violation::Asymmetry { a, b } => write!(f, "asymmetry: d({a},{b}) != d({b},{a})"),
            Violation::Triangle { a, b, c } => {
                write!(f, "triangle: d({a},{c}) > d({a},{b}) + d({b},{c})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// The unordered point triples flagged by triangle failures.
    pub fn triangle_triples(&self) -> Vec<BTreeSet<String>> {
        self.violations
            .iter()
            .filter_map(|v| match v {
                Violation::Triangle { a, b, c } => Some([a.clone(), b.clone(), c.clone()].into_iter().collect()),
                _ => None,
            })
            .collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("invalid metric space:\n{0}")]
    Invalid(ValidationReport),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("point `{0}` already present")]
    DuplicatePoint(String),
    #[error(transparent)]
    Katetov(#[from] KatetovError),
}

/// Checks every metric-space invariant and lists all violations.
///
/// Range and asymmetry problems are reported separately from triangle
/// failures; each unordered triple is reported at most once.
pub fn validate_metric(points: &[String], dist: &[Vec<Rational>]) -> ValidationReport {
    let n = points.len();
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for p in points {
        if !seen.insert(p) {
            violations.push(Violation::DuplicatePoint(p.clone()));
        }
    }
    if dist.len() != n {
        violations.push(Violation::Shape { rows: dist.len(), expected: n });
    }
    for row in dist {
        if row.len() != n {
            violations.push(Violation::Shape { rows: row.len(), expected: n });
        }
    }
    if !violations.is_empty() {
        return ValidationReport { violations };
    }
    for i in 0..n {
        if !dist[i][i].is_zero() {
            violations.push(Violation::Diagonal { a: points[i].clone(), value: dist[i][i].clone() });
        }
        for j in 0..n {
            if !in_unit(&dist[i][j]) {
                violations.push(Violation::Range {
                    a: points[i].clone(),
                    b: points[j].clone(),
                    value: dist[i][j].clone(),
                });
            }
            if i < j && dist[i][j] != dist[j][i] {
                violations.push(Violation::Asymmetry { a: points[i].clone(), b: points[j].clone() });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                // The three ways one side can exceed the other two.
                let sides = [(i, j, k), (j, i, k), (i, k, j)];
                for &(a, mid, c) in &sides {
                    if dist[a][c] > &dist[a][mid] + &dist[mid][c] {
                        violations.push(Violation::Triangle {
                            a: points[a].clone(),
                            b: points[mid].clone(),
                            c: points[c].clone(),
                        });
                        break;
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// A finite metric space with exact rational distances in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalMetricSpace {
    points: Vec<String>,
    index: HashMap<String, usize>,
    dist: Vec<Vec<Rational>>,
}

impl RationalMetricSpace {
    pub fn new(points: Vec<String>, dist: Vec<Vec<Rational>>) -> Result<Self, MetricError> {
        let report = validate_metric(&points, &dist);
        if !report.is_ok() {
            return Err(MetricError::Invalid(report));
        }
        let index = points.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        Ok(RationalMetricSpace { points, index, dist })
    }

    /// Builds a space from a distance function on indices (only `i < j` is queried).
    pub fn from_fn(points: Vec<String>, mut d: impl FnMut(usize, usize) -> Rational) -> Result<Self, MetricError> {
        let n = points.len();
        let mut dist = vec![vec![zero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = d(i, j);
                dist[i][j] = v.clone();
                dist[j][i] = v;
            }
        }
        Self::new(points, dist)
    }

    pub fn singleton(name: &str) -> Self {
        Self::new(vec![name.to_string()], vec![vec![zero()]]).expect("singleton is a metric space")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn name(&self, i: usize) -> &str {
        &self.points[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<usize, MetricError> {
        self.index_of(name).ok_or_else(|| MetricError::UnknownPoint(name.to_string()))
    }

    pub fn d(&self, i: usize, j: usize) -> &Rational {
        &self.dist[i][j]
    }

    pub fn dist_table(&self) -> &[Vec<Rational>] {
        &self.dist
    }

    pub fn d_named(&self, a: &str, b: &str) -> Result<&Rational, MetricError> {
        Ok(self.d(self.require(a)?, self.require(b)?))
    }

    /// The subspace on the given indices, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let points = indices.iter().map(|&i| self.points[i].clone()).collect();
        let dist = indices.iter().map(|&i| indices.iter().map(|&j| self.dist[i][j].clone()).collect()).collect();
        Self::new(points, dist).expect("subspace of a metric space")
    }

    /// Whether `other` is a superspace of `self` with identical distances.
    pub fn is_subspace_of(&self, other: &RationalMetricSpace) -> bool {
        let map: Option<Vec<usize>> = self.points.iter().map(|p| other.index_of(p)).collect();
        match map {
            Some(map) => (0..self.len()).all(|i| (0..self.len()).all(|j| self.d(i, j) == other.d(map[i], map[j]))),
            None => false,
        }
    }

    /// All distance-preserving permutations, in lexicographic order of their
    /// image vectors (the identity comes first).
    pub fn isometries(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut out = Vec::new();
        let mut image = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.extend_isometry(&mut image, &mut used, &mut out);
        out
    }

    fn extend_isometry(&self, image: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let i = image.len();
        if i == self.len() {
            out.push(image.clone());
            return;
        }
        for cand in 0..self.len() {
            if used[cand] || (0..i).any(|j| self.d(j, i) != self.d(image[j], cand)) {
                continue;
            }
            used[cand] = true;
            image.push(cand);
            self.extend_isometry(image, used, out);
            image.pop();
            used[cand] = false;
        }
    }

    /// A point name not yet in use, derived from `stem`.
    pub fn fresh_name(&self, stem: &str) -> String {
        if self.index_of(stem).is_none() {
            return stem.to_string();
        }
        (1..).map(|k| format!("{stem}_{k}")).find(|c| self.index_of(c).is_none()).expect("unbounded name supply")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KatetovError {
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("value at {point} = {value} outside [0,1]")]
    Range { point: String, value: String },
    #[error("|f({a}) - f({b})| > d({a},{b})")]
    Lipschitz { a: String, b: String },
    #[error("d({a},{b}) > f({a}) + f({b})")]
    Triangle { a: String, b: String },
}

/// Candidate distances from a new point to every point of a base space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KatetovFunction {
    values: Vec<Rational>,
}

impl KatetovFunction {
    pub fn new(values: Vec<Rational>) -> Self {
        KatetovFunction { values }
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// `|f(a) - f(b)| <= d(a,b) <= f(a) + f(b)` for every pair, values in `[0,1]`.
    pub fn check_admissible(&self, space: &RationalMetricSpace) -> Result<(), KatetovError> {
        let f = &self.values;
        if f.len() != space.len() {
            return Err(KatetovError::Length { expected: space.len(), got: f.len() });
        }
        for (i, v) in f.iter().enumerate() {
            if !in_unit(v) {
                return Err(KatetovError::Range { point: space.name(i).to_string(), value: fmt_rational(v) });
            }
        }
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                let (a, b) = (space.name(i).to_string(), space.name(j).to_string());
                if (&f[i] - &f[j]).abs() > *space.d(i, j) {
                    return Err(KatetovError::Lipschitz { a, b });
                }
                if *space.d(i, j) > &f[i] + &f[j] {
                    return Err(KatetovError::Triangle { a, b });
                }
            }
        }
        Ok(())
    }

    /// The largest Katětov function on `space` agreeing with `partial` on
    /// the listed indices, capped at 1: `x -> min(1, min_s f(s) + d(s, x))`.
    pub fn extend_from(space: &RationalMetricSpace, partial: &[(usize, Rational)]) -> Self {
        let values = (0..space.len())
            .map(|x| partial.iter().map(|(s, v)| v + space.d(*s, x)).min().unwrap_or_else(one).min(one()))
            .collect();
        KatetovFunction { values }
    }
}

/// Adds one point `name` at distances `f` from the existing points.
pub fn one_point_extend(
    space: &RationalMetricSpace,
    f: &KatetovFunction,
    name: &str,
) -> Result<RationalMetricSpace, MetricError> {
    f.check_admissible(space)?;
    if space.index_of(name).is_some() {
        return Err(MetricError::DuplicatePoint(name.to_string()));
    }
    let n = space.len();
    let mut points = space.points.clone();
    points.push(name.to_string());
    let mut dist: Vec<Vec<Rational>> = space.dist.clone();
    for (row, v) in dist.iter_mut().zip(f.values()) {
        row.push(v.clone());
    }
    let mut last = f.values().to_vec();
    last.push(zero());
    dist.push(last);
    debug_assert_eq!(dist.len(), n + 1);
    RationalMetricSpace::new(points, dist)
}

/// An injective distance-preserving map `source -> target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingWitness {
    pub source: RationalMetricSpace,
    pub target: RationalMetricSpace,
    /// `map[i]` is the target index of source point `i`.
    pub map: Vec<usize>,
}

impl EmbeddingWitness {
    pub fn verify(&self) -> bool {
        let n = self.source.len();
        self.map.len() == n
            && self.map.iter().collect::<BTreeSet<_>>().len() == n
            && self.map.iter().all(|&t| t < self.target.len())
            && (0..n).all(|i| (0..n).all(|j| self.source.d(i, j) == self.target.d(self.map[i], self.map[j])))
    }
}

// ---------------------------------------------------------------------------
// Amalgamation over a shared prefix.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HypothesisFailure {
    Shape(String),
    NonPositiveEps,
    /// `K*eps < d(a_i, a_j)` fails.
    Separation {
        i: usize,
        j: usize,
    },
    /// Non-geodesic triple with apex `i` whose slack `d(a_i,a_j) + d(a_i,a_k) - d(a_j,a_k)` is at most `K*eps`.
    Margin {
        i: usize,
        j: usize,
        k: usize,
    },
    /// `a_j` lies between `a_i` and the shared point `a_k`.
    SharedGeodesic {
        i: usize,
        j: usize,
        k: usize,
    },
    /// `|d(b_i,b_j) - d(a_i,a_j)| > eps`.
    Deviation {
        i: usize,
        j: usize,
    },
    /// B disagrees with A on the shared prefix.
    SharedMismatch {
        i: usize,
        j: usize,
    },
    NameClash(String),
}

impl fmt::Display for HypothesisFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Indices are printed 1-based to match the usual a_1..a_n numbering.
        match self {
            HypothesisFailure::Shape(s) => write!(f, "shape: {s}"),
            HypothesisFailure::NonPositiveEps => write!(f, "eps must be positive"),
            HypothesisFailure::Separation { i, j } => {
                write!(f, "separation: K*eps >= d(a{},a{})", i + 1, j + 1)
            }
            HypothesisFailure::Margin { i, j, k } => write!(
                f,
                "margin: K*eps >= d(a{i1},a{j1}) + d(a{i1},a{k1}) - d(a{j1},a{k1})",
                i1 = i + 1,
                j1 = j + 1,
                k1 = k + 1
            ),
            HypothesisFailure::SharedGeodesic { i, j, k } => {
                write!(f, "geodesic: a{} between a{} and shared a{}", j + 1, i + 1, k + 1)
            }
            HypothesisFailure::Deviation { i, j } => {
                write!(f, "deviation: |d(b{i1},b{j1}) - d(a{i1},a{j1})| > eps", i1 = i + 1, j1 = j + 1)
            }
            HypothesisFailure::SharedMismatch { i, j } => {
                write!(f, "shared: d(b{i1},b{j1}) != d(a{i1},a{j1})", i1 = i + 1, j1 = j + 1)
            }
            HypothesisFailure::NameClash(p) => write!(f, "name clash: {p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmalgamationError {
    #[error("hypotheses fail: {}", .0.iter().map(|h| h.to_string()).collect::<Vec<_>>().join("; "))]
    Hypotheses(Vec<HypothesisFailure>),
    #[error(transparent)]
    Metric(#[from] MetricError),
    /// Triangle violation left by the construction; indicates a bug.
    #[error("construction broke the triangle inequality on ({0}, {1}, {2})")]
    Construction(String, String, String),
}

/// `2 * C(m, 2) + 1 = m(m-1) + 1`, the displacement multiplier.
pub fn displacement_factor(n: usize, shared: usize) -> Rational {
    let m = (n - shared) as i64;
    q(m * (m - 1) + 1, 1)
}

/// One processed cross pair, with the shift used below `min(d(a_i,a_j), d(b_i,b_j))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossStep {
    pub i: usize,
    pub j: usize,
    pub level: Rational,
    pub shift: Rational,
}

/// How the cross distances `d(a_i, b_j)` were obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmalgamationMethod {
    /// Pairwise inductive assignment below `min(d(a_i,a_j), d(b_i,b_j))`.
    Inductive,
    /// Shortest paths through `A`, `B` and the displacement edges, capped
    /// at one. Used when the inductive assignment has no admissible shift for
    /// some pair; `trigger` is the triangle that blocked it.
    ShortestPath { trigger: (String, String, String) },
}

#[derive(Debug, Clone)]
pub struct Amalgamation {
    /// Points `a_1..a_n` followed by `b_{q+1}..b_n`.
    pub space: RationalMetricSpace,
    /// Embedding of `B` into `space` fixing the shared prefix.
    pub witness: EmbeddingWitness,
    pub method: AmalgamationMethod,
    /// Shifts chosen by the inductive assignment (empty for shortest paths).
    pub steps: Vec<CrossStep>,
}

/// Checks the hypotheses of the amalgamation and returns every failure.
pub fn check_amalgamation_hypotheses(
    a_space: &RationalMetricSpace,
    a_points: &[String],
    b_space: &RationalMetricSpace,
    shared: usize,
    eps: &Rational,
) -> Result<Vec<HypothesisFailure>, MetricError> {
    let n = a_points.len();
    let mut out = Vec::new();
    if b_space.len() != n {
        out.push(HypothesisFailure::Shape(format!("B has {} points, A tuple has {n}", b_space.len())));
        return Ok(out);
    }
    if shared >= n {
        out.push(HypothesisFailure::Shape(format!("shared prefix {shared} must be < n = {n}")));
        return Ok(out);
    }
    if !eps.is_positive() {
        out.push(HypothesisFailure::NonPositiveEps);
    }
    let idx: Vec<usize> = a_points.iter().map(|p| a_space.require(p)).collect::<Result<_, _>>()?;
    if idx.iter().collect::<BTreeSet<_>>().len() != n {
        out.push(HypothesisFailure::Shape("A tuple repeats a point".into()));
        return Ok(out);
    }
    let da = |i: usize, j: usize| a_space.d(idx[i], idx[j]);
    let db = |i: usize, j: usize| b_space.d(i, j);
    let k_eps = displacement_factor(n, shared) * eps;
    for i in 0..n {
        for j in i + 1..n {
            if k_eps >= *da(i, j) {
                out.push(HypothesisFailure::Separation { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in j + 1..n {
                if i == j || i == k {
                    continue;
                }
                let slack = da(i, j) + da(i, k) - da(j, k);
                if !slack.is_zero() && k_eps >= slack {
                    out.push(HypothesisFailure::Margin { i, j, k });
                }
            }
        }
    }
    for k in 0..shared {
        for i in shared..n {
            for j in shared..n {
                if i != j && da(i, j) + da(j, k) == *da(i, k) {
                    out.push(HypothesisFailure::SharedGeodesic { i, j, k });
                }
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if j < shared {
                if db(i, j) != da(i, j) {
                    out.push(HypothesisFailure::SharedMismatch { i, j });
                }
            } else if (db(i, j) - da(i, j)).abs() > *eps {
                out.push(HypothesisFailure::Deviation { i, j });
            }
        }
    }
    for p in &b_space.points()[shared..] {
        if a_points.contains(p) {
            out.push(HypothesisFailure::NameClash(p.clone()));
        }
    }
    Ok(out)
}

/// Builds a metric on `{a_1..a_n, b_{q+1}..b_n}` extending `A` and `B`, with
/// `d(a_i, b_i) = (2*C(n-q, 2) + 1) * eps` for every non-shared index.
///
/// Cross distances `d(a_i,b_j) = d(b_i,a_j)` are assigned pair by pair in
/// ascending order of `min(d(a_i,a_j), d(b_i,b_j))` (ties by index) as that
/// minimum minus a shift `eps_m`. The shift starts at `eps/2`; if a triangle
/// through an already-defined point fails, it takes the largest shift used
/// on the pairs through geodesic middle points, and failing that climbs in
/// steps of `eps/2`, never exceeding `m * eps`.
///
/// No shift works when `a_k` lies on a geodesic between two non-shared
/// points: both cross distances through `b_k` sit below the `A` distances,
/// so `d(a_i,b_k) + d(b_k,a_j) < d(a_i,a_j)`. In that case the cross block is
/// rebuilt as the shortest-path amalgamation, which keeps every prescribed
/// distance under the same hypotheses.
pub fn amalgamate(
    a_space: &RationalMetricSpace,
    a_points: &[String],
    b_space: &RationalMetricSpace,
    shared: usize,
    eps: &Rational,
) -> Result<Amalgamation, AmalgamationError> {
    let failures = check_amalgamation_hypotheses(a_space, a_points, b_space, shared, eps)?;
    if !failures.is_empty() {
        return Err(AmalgamationError::Hypotheses(failures));
    }
    let n = a_points.len();
    let idx: Vec<usize> = a_points.iter().map(|p| a_space.require(p)).collect::<Result<_, _>>()?;
    let da = |i: usize, j: usize| a_space.d(idx[i], idx[j]).clone();
    let db = |i: usize, j: usize| b_space.d(i, j).clone();

    // Global indices: a_i -> i, b_i -> n + i - shared for i >= shared, b_i -> i otherwise.
    let total = 2 * n - shared;
    let b_at = |i: usize| if i < shared { i } else { n + i - shared };
    let mut dist: Vec<Vec<Option<Rational>>> = vec![vec![None; total]; total];
    let set = |dist: &mut Vec<Vec<Option<Rational>>>, x: usize, y: usize, v: Rational| {
        dist[x][y] = Some(v.clone());
        dist[y][x] = Some(v);
    };
    for x in 0..total {
        dist[x][x] = Some(zero());
    }
    for i in 0..n {
        for j in i + 1..n {
            set(&mut dist, i, j, da(i, j));
            set(&mut dist, b_at(i), b_at(j), db(i, j));
        }
    }
    let displacement = displacement_factor(n, shared) * eps;
    for i in shared..n {
        set(&mut dist, i, b_at(i), displacement.clone());
    }
    // Shared a_k = b_k: d(a_k, b_j) is d(b_k, b_j), already set through b_at.

    let mut pairs: Vec<(Rational, usize, usize)> = Vec::new();
    for i in shared..n {
        for j in i + 1..n {
            pairs.push((da(i, j).min(db(i, j)), i, j));
        }
    }
    pairs.sort();

    let half = eps / q(2, 1);
    let mut shift_of: HashMap<(usize, usize), Rational> = HashMap::new();
    let mut steps = Vec::new();
    let mut fallback = None;
    for (m, (level, i, j)) in pairs.into_iter().enumerate() {
        let cap = q(m as i64 + 1, 1) * eps;
        let new_edges = [(i, b_at(j)), (b_at(i), j)];
        let fits = |dist: &Vec<Vec<Option<Rational>>>, shift: &Rational| {
            let v = &level - shift;
            first_broken_triangle(dist, &new_edges, &v).is_none()
        };
        let mut candidates = vec![half.clone()];
        // Middle points on a geodesic between a_i and a_j whose pairs are done.
        let geodesic_shift = (shared..n)
            .filter(|&k| k != i && k != j && da(i, k) + da(k, j) == da(i, j))
            .flat_map(|k| [shift_of.get(&ordered(i, k)), shift_of.get(&ordered(j, k))])
            .flatten()
            .max()
            .cloned();
        if let Some(g) = geodesic_shift {
            candidates.push(g);
        }
        let mut climb = &half + &half;
        while climb <= cap {
            candidates.push(climb.clone());
            climb = &climb + &half;
        }
        let chosen = candidates.into_iter().filter(|c| *c >= half && *c <= cap).find(|c| fits(&dist, c));
        let shift = match chosen {
            Some(s) => s,
            None => {
                let v = &level - &half;
                let (x, y, z) =
                    first_broken_triangle(&dist, &new_edges, &v).expect("no candidate fits, so eps/2 fails");
                let name = |g: usize| global_name(g, n, shared, a_points, b_space);
                let trigger = (name(x), name(y), name(z));
                fallback = Some(trigger);
                break;
            }
        };
        let v = &level - &shift;
        for &(x, y) in &new_edges {
            set(&mut dist, x, y, v.clone());
        }
        shift_of.insert((i, j), shift.clone());
        steps.push(CrossStep { i, j, level, shift });
    }

    let method = match fallback {
        None => AmalgamationMethod::Inductive,
        Some(trigger) => {
            steps.clear();
            shortest_path_completion(&mut dist, n, shared);
            AmalgamationMethod::ShortestPath { trigger }
        }
    };
    let points: Vec<String> = (0..total).map(|g| global_name(g, n, shared, a_points, b_space)).collect();
    let table: Vec<Vec<Rational>> =
        dist.into_iter().map(|row| row.into_iter().map(|v| v.expect("all distances assigned")).collect()).collect();
    let report = validate_metric(&points, &table);
    if let Some(t) = report.triangle_triples().first() {
        let t: Vec<String> = t.iter().cloned().collect();
        return Err(AmalgamationError::Construction(t[0].clone(), t[1].clone(), t[2].clone()));
    }
    let space = RationalMetricSpace::new(points, table)?;
    let witness = EmbeddingWitness { source: b_space.clone(), target: space.clone(), map: (0..n).map(b_at).collect() };
    Ok(Amalgamation { space, witness, method, steps })
}

/// Replaces every cross distance `d(a_i, b_j)` (both non-shared, `i != j`)
/// by the shortest path over the `A`, `B` and displacement edges, capped at 1.
fn shortest_path_completion(dist: &mut [Vec<Option<Rational>>], n: usize, shared: usize) {
    let total = dist.len();
    for i in shared..n {
        for j in shared..n {
            if i != j {
                dist[i][n + j - shared] = None;
                dist[n + j - shared][i] = None;
            }
        }
    }
    for k in 0..total {
        for x in 0..total {
            for y in 0..total {
                let via = match (&dist[x][k], &dist[k][y]) {
                    (Some(a), Some(b)) => a + b,
                    _ => continue,
                };
                if dist[x][y].as_ref().is_none_or(|cur| via < *cur) {
                    dist[x][y] = Some(via);
                }
            }
        }
    }
    for row in dist.iter_mut() {
        for x in row.iter_mut().flatten() {
            if *x > one() {
                *x = one();
            }
        }
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

fn global_name(g: usize, n: usize, shared: usize, a_points: &[String], b: &RationalMetricSpace) -> String {
    if g < n {
        a_points[g].clone()
    } else {
        b.name(g - n + shared).to_string()
    }
}

/// First triangle through one of `edges` (tentatively of length `v`) that
/// fails, over third points whose other two distances are known.
fn first_broken_triangle(
    dist: &[Vec<Option<Rational>>],
    edges: &[(usize, usize)],
    v: &Rational,
) -> Option<(usize, usize, usize)> {
    for &(x, y) in edges {
        for z in 0..dist.len() {
            if z == x || z == y {
                continue;
            }
            let (Some(xz), Some(yz)) = (&dist[x][z], &dist[y][z]) else {
                continue;
            };
            if v > &(xz + yz) || *xz > v + yz || *yz > v + xz {
                return Some((x, y, z));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Budgeted approximation of the rational Urysohn space.

/// One realised extension task: a Katětov function on a subset of the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtensionTask {
    pub subset: Vec<String>,
    pub values: Vec<Rational>,
    pub realized_by: String,
    /// Whether the realising point was added for this task.
    pub added: bool,
}

#[derive(Debug, Clone)]
pub struct QuApproximation {
    pub space: RationalMetricSpace,
    pub certificate: Vec<ExtensionTask>,
}

/// All rationals in `(0, 1]` with denominator at most `bound`, ascending.
pub fn grid_values(bound: u32) -> Vec<Rational> {
    let set: BTreeSet<Rational> = (1..=bound as i64).flat_map(|d| (1..=d).map(move |k| q(k, d))).collect();
    set.into_iter().collect()
}

/// Extends `seed` so that, for every non-empty subset of the seed of size
/// at most `budget` and every admissible Katětov function on it with
/// positive values of denominator at most `denominator_bound`, some point
/// realises those distances.
///
/// Tasks run in a fixed order (subsets by size then index order, functions
/// lexicographically); a task already realised by an existing point adds
/// nothing. New points sit at the maximal Katětov extension of the task.
pub fn qu_enumerate(
    seed: &RationalMetricSpace,
    denominator_bound: u32,
    budget: usize,
) -> Result<QuApproximation, MetricError> {
    let values = grid_values(denominator_bound);
    let mut space = seed.clone();
    let mut certificate = Vec::new();
    let mut counter = 0usize;
    for size in 1..=budget.min(seed.len()) {
        for subset in index_subsets(seed.len(), size) {
            let seed_sub = seed.restrict(&subset);
            let mut f = vec![0usize; size];
            loop {
                let vals: Vec<Rational> = f.iter().map(|&k| values[k].clone()).collect();
                if KatetovFunction::new(vals.clone()).check_admissible(&seed_sub).is_ok() {
                    // Seed points keep their indices in `space`.
                    let existing =
                        (0..space.len()).find(|&p| subset.iter().zip(&vals).all(|(&s, v)| space.d(p, s) == v));
                    let (realized_by, added) = match existing {
                        Some(p) => (space.name(p).to_string(), false),
                        None => {
                            counter += 1;
                            let name = space.fresh_name(&format!("u{counter}"));
                            let partial: Vec<(usize, Rational)> =
                                subset.iter().cloned().zip(vals.iter().cloned()).collect();
                            let ext = KatetovFunction::extend_from(&space, &partial);
                            space = one_point_extend(&space, &ext, &name)?;
                            (name, true)
                        }
                    };
                    certificate.push(ExtensionTask {
                        subset: subset.iter().map(|&s| seed.name(s).to_string()).collect(),
                        values: vals,
                        realized_by,
                        added,
                    });
                }
                if !advance_odometer(&mut f, values.len()) {
                    break;
                }
            }
        }
    }
    Ok(QuApproximation { space, certificate })
}

/// Increments a little-endian-last odometer; false once it wraps around.
fn advance_odometer(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// `k`-subsets of `0..n` in lexicographic order.
pub fn index_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Convenience for tests and examples: a space from `(a, b, d)` triples.
pub fn space_from_pairs(points: &[&str], pairs: &[(&str, &str, Rational)]) -> Result<RationalMetricSpace, MetricError> {
    let names: Vec<String> = points.iter().map(|s| s.to_string()).collect();
    let pos = |p: &str| names.iter().position(|x| x == p).ok_or_else(|| MetricError::UnknownPoint(p.into()));
    let n = names.len();
    let mut dist = vec![vec![zero(); n]; n];
    for (a, b, v) in pairs {
        let (i, j) = (pos(a)?, pos(b)?);
        dist[i][j] = v.clone();
        dist[j][i] = v.clone();
    }
    RationalMetricSpace::new(names, dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(ps: &[&str]) -> Vec<String> {
        ps.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn validate_examples() {
        assert!(validate_metric(&names(&["a"]), &[vec![zero()]]).is_ok());
        let h = q(1, 2);
        let eq = RationalMetricSpace::from_fn(names(&["a", "b", "c"]), |_, _| h.clone());
        assert!(eq.is_ok());

        let t =
            vec![vec![zero(), q(1, 10), q(9, 10)], vec![q(1, 10), zero(), q(1, 10)], vec![q(9, 10), q(1, 10), zero()]];
        let report = validate_metric(&names(&["a", "b", "c"]), &t);
        let triples = report.triangle_triples();
        assert_eq!(triples.len(), 1);
        assert_eq!(triples[0], names(&["a", "b", "c"]).into_iter().collect());
    }

    #[test]
    fn range_and_asymmetry_reported_separately() {
        let t = vec![vec![zero(), q(3, 2)], vec![q(1, 2), zero()]];
        let report = validate_metric(&names(&["a", "b"]), &t);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Range { .. })));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::Asymmetry { .. })));
        assert!(report.triangle_triples().is_empty());
    }

    #[test]
    fn one_point_examples() {
        let s = RationalMetricSpace::singleton("a");
        let e = one_point_extend(&s, &KatetovFunction::new(vec![q(1, 3)]), "p").unwrap();
        assert_eq!(*e.d(0, 1), q(1, 3));

        let ab = space_from_pairs(&["a", "b"], &[("a", "b", q(3, 5))]).unwrap();
        let mid = KatetovFunction::new(vec![q(3, 10), q(3, 10)]);
        assert_eq!(one_point_extend(&ab, &mid, "m").unwrap().len(), 3);
        let bad = KatetovFunction::new(vec![q(1, 10), q(1, 10)]);
        assert_eq!(
            one_point_extend(&ab, &bad, "m"),
            Err(MetricError::Katetov(KatetovError::Triangle { a: "a".into(), b: "b".into() }))
        );
    }

    #[test]
    fn amalgamation_two_points() {
        let a = space_from_pairs(&["a1", "a2"], &[("a1", "a2", q(1, 2))]).unwrap();
        let b = space_from_pairs(&["b1", "b2"], &[("b1", "b2", q(9, 20))]).unwrap();
        let out = amalgamate(&a, &names(&["a1", "a2"]), &b, 0, &q(1, 10)).unwrap();
        let s = &out.space;
        let d = |x: &str, y: &str| s.d_named(x, y).unwrap().clone();
        assert_eq!(d("a1", "b1"), q(3, 10));
        assert_eq!(d("a2", "b2"), q(3, 10));
        assert_eq!(d("a1", "b2"), q(2, 5));
        assert_eq!(d("b1", "a2"), q(2, 5));
        assert!(out.witness.verify());
    }

    #[test]
    fn amalgamation_isometric_copy_still_displaced() {
        let a = space_from_pairs(&["a1", "a2"], &[("a1", "a2", q(1, 2))]).unwrap();
        let b = space_from_pairs(&["b1", "b2"], &[("b1", "b2", q(1, 2))]).unwrap();
        let eps = q(1, 100);
        let out = amalgamate(&a, &names(&["a1", "a2"]), &b, 0, &eps).unwrap();
        assert_eq!(*out.space.d_named("a1", "b1").unwrap(), q(3, 100));
    }

    #[test]
    fn amalgamation_through_geodesic_falls_back_to_paths() {
        // a3 lies between a1 and a2; no shift below the minimum can work.
        let a = space_from_pairs(
            &["a1", "a2", "a3"],
            &[("a1", "a2", q(7, 12)), ("a1", "a3", q(1, 6)), ("a2", "a3", q(5, 12))],
        )
        .unwrap();
        let b = space_from_pairs(
            &["b1", "b2", "b3"],
            &[("b1", "b2", q(167, 288)), ("b1", "b3", q(1, 6)), ("b2", "b3", q(5, 12))],
        )
        .unwrap();
        let eps = q(1, 144);
        let a_names = names(&["a1", "a2", "a3"]);
        assert!(check_amalgamation_hypotheses(&a, &a_names, &b, 0, &eps).unwrap().is_empty());
        let out = amalgamate(&a, &a_names, &b, 0, &eps).unwrap();
        assert!(matches!(out.method, AmalgamationMethod::ShortestPath { .. }));
        assert!(out.witness.verify());
        let k = displacement_factor(3, 0) * &eps;
        for i in 0..3 {
            assert_eq!(*out.space.d(i, 3 + i), k);
        }
    }

    #[test]
    fn amalgamation_rejects_bad_hypotheses() {
        let a = space_from_pairs(&["a1", "a2"], &[("a1", "a2", q(1, 5))]).unwrap();
        let b = space_from_pairs(&["b1", "b2"], &[("b1", "b2", q(1, 5))]).unwrap();
        // 3 * eps = 3/10 >= 1/5
        let err = amalgamate(&a, &names(&["a1", "a2"]), &b, 0, &q(1, 10)).unwrap_err();
        assert!(matches!(err, AmalgamationError::Hypotheses(ref v)
            if v.contains(&HypothesisFailure::Separation { i: 0, j: 1 })));
    }

    #[test]
    fn enumerator_examples() {
        let s = RationalMetricSpace::singleton("a");
        let out = qu_enumerate(&s, 2, 1).unwrap();
        let ds: BTreeSet<Rational> = (1..out.space.len()).map(|i| out.space.d(0, i).clone()).collect();
        assert_eq!(ds, [q(1, 2), q(1, 1)].into_iter().collect());
        assert_eq!(qu_enumerate(&s, 5, 0).unwrap().space, s);

        let ab = space_from_pairs(&["a", "b"], &[("a", "b", q(1, 2))]).unwrap();
        let out = qu_enumerate(&ab, 2, 2).unwrap();
        let pair_tasks: Vec<_> = out.certificate.iter().filter(|t| t.subset.len() == 2).collect();
        let got: Vec<Vec<Rational>> = pair_tasks.iter().map(|t| t.values.clone()).collect();
        assert_eq!(
            got,
            vec![vec![q(1, 2), q(1, 2)], vec![q(1, 2), q(1, 1)], vec![q(1, 1), q(1, 2)], vec![q(1, 1), q(1, 1)]]
        );
        for t in &out.certificate {
            let p = out.space.index_of(&t.realized_by).unwrap();
            for (s, v) in t.subset.iter().zip(&t.values) {
                assert_eq!(out.space.d(p, out.space.index_of(s).unwrap()), v);
            }
        }
    }

    #[test]
    fn isometries_of_equilateral_triangle() {
        let h = q(1, 2);
        let s = RationalMetricSpace::from_fn(names(&["a", "b", "c"]), |_, _| h.clone()).unwrap();
        let isos = s.isometries();
        assert_eq!(isos.len(), 6);
        assert_eq!(isos[0], vec![0, 1, 2]);
    }
}
