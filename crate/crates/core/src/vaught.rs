//! Vaught transforms on finite G-spaces.
//!
//! Groups and spaces here are finite and discrete, so "not meagre in U"
//! means "meets U" and "comeagre in U" means "contains U". Nothing in this
//! module says anything about non-discrete groups.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num::Signed;
use rand::Rng;
use thiserror::Error;

use crate::rational::{dot_minus, dot_plus, dot_scale, in_unit, neg, one, q, zero, Frac, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VaughtError {
    #[error("permutation `{0}` is not a bijection of the points")]
    BadPermutation(String),
    #[error("group has more than {0} elements")]
    TooLarge(usize),
    #[error("table has {found} entries, expected {expected}")]
    TableSize { expected: usize, found: usize },
    #[error("table value {0} outside [0, 1]")]
    Range(String),
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("unknown name `{0}`")]
    Unknown(String),
    #[error("group subset must be non-empty")]
    EmptySubset,
    #[error("index {0} out of range")]
    Index(usize),
    #[error("threshold scan disagrees with the closed form at point {point}")]
    ScanMismatch { point: usize },
}

/// A `[0, 1]`-valued table over points or group elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GradedTable(Vec<Rational>);

impl GradedTable {
    pub fn new(values: Vec<Rational>) -> Result<Self, VaughtError> {
        if let Some(v) = values.iter().find(|v| !in_unit(v)) {
            return Err(VaughtError::Range(Frac(v).to_string()));
        }
        Ok(GradedTable(values))
    }

    pub fn constant(len: usize, c: Rational) -> Self {
        GradedTable(vec![c; len])
    }

    /// `0` on the set, `1` off it.
    pub fn characteristic(len: usize, set: &BTreeSet<usize>) -> Self {
        GradedTable((0..len).map(|i| if set.contains(&i) { zero() } else { one() }).collect())
    }

    pub fn values(&self) -> &[Rational] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> &Rational {
        &self.0[i]
    }

    pub fn map(&self, f: impl Fn(&Rational) -> Rational) -> Self {
        GradedTable(self.0.iter().map(f).collect())
    }

    pub fn zip(&self, other: &Self, f: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        GradedTable(self.0.iter().zip(&other.0).map(|(a, b)| f(a, b)).collect())
    }

    pub fn below(&self, r: &Rational) -> BTreeSet<usize> {
        (0..self.len()).filter(|&i| &self.0[i] < r).collect()
    }

    pub fn at_most(&self, r: &Rational) -> BTreeSet<usize> {
        (0..self.len()).filter(|&i| &self.0[i] <= r).collect()
    }
}

/// A finite group acting on a finite point set by permutations.
///
/// Element 0 is the identity `e`; the rest are named by words in the
/// generators, in breadth-first order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGSpace {
    points: Vec<String>,
    generators: Vec<(String, Vec<usize>)>,
    names: Vec<String>,
    perms: Vec<Vec<usize>>,
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
    space_tables: BTreeMap<String, GradedTable>,
    group_tables: BTreeMap<String, GradedTable>,
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    // (a ∘ b)(x) = a(b(x))
    b.iter().map(|&x| a[x]).collect()
}

impl FiniteGSpace {
    /// Closes the generators under composition; fails above `limit` elements.
    pub fn generated(
        points: Vec<String>,
        generators: Vec<(String, Vec<usize>)>,
        limit: usize,
    ) -> Result<Self, VaughtError> {
        let n = points.len();
        let mut seen_names = BTreeSet::new();
        for p in &points {
            if !seen_names.insert(p.clone()) {
                return Err(VaughtError::Duplicate(p.clone()));
            }
        }
        for (name, perm) in &generators {
            let set: BTreeSet<usize> = perm.iter().copied().collect();
            if perm.len() != n || set.len() != n || set.iter().any(|&x| x >= n) {
                return Err(VaughtError::BadPermutation(name.clone()));
            }
            if name == "e" || !seen_names.insert(name.clone()) {
                return Err(VaughtError::Duplicate(name.clone()));
            }
        }
        let identity: Vec<usize> = (0..n).collect();
        let mut index: BTreeMap<Vec<usize>, usize> = BTreeMap::from([(identity.clone(), 0)]);
        let mut perms = vec![identity];
        let mut names = vec!["e".to_string()];
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for (gname, g) in &generators {
                let p = compose(g, &perms[i]);
                if index.contains_key(&p) {
                    continue;
                }
                if perms.len() >= limit {
                    return Err(VaughtError::TooLarge(limit));
                }
                let name = if i == 0 { gname.clone() } else { format!("{gname}.{}", names[i]) };
                index.insert(p.clone(), perms.len());
                queue.push_back(perms.len());
                perms.push(p);
                names.push(name);
            }
        }
        let mul = perms.iter().map(|a| perms.iter().map(|b| index[&compose(a, b)]).collect()).collect();
        let inv = perms
            .iter()
            .map(|p| {
                let mut q = vec![0; n];
                for (x, &y) in p.iter().enumerate() {
                    q[y] = x;
                }
                index[&q]
            })
            .collect();
        Ok(FiniteGSpace {
            points,
            generators,
            names,
            perms,
            mul,
            inv,
            space_tables: BTreeMap::new(),
            group_tables: BTreeMap::new(),
        })
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    pub fn element_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|p| p == name)
    }

    pub fn generators(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.generators.iter().map(|(g, p)| (g.as_str(), p.as_slice()))
    }

    pub fn order(&self) -> usize {
        self.perms.len()
    }

    pub fn element_names(&self) -> &[String] {
        &self.names
    }

    /// `g · x`.
    pub fn act(&self, g: usize, x: usize) -> usize {
        self.perms[g][x]
    }

    /// `a b`, acting as `b` first.
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn add_space_table(&mut self, name: &str, t: GradedTable) -> Result<(), VaughtError> {
        self.check_len(&t, self.points.len())?;
        if self.space_tables.insert(name.into(), t).is_some() {
            return Err(VaughtError::Duplicate(name.into()));
        }
        Ok(())
    }

    pub fn add_group_table(&mut self, name: &str, t: GradedTable) -> Result<(), VaughtError> {
        self.check_len(&t, self.order())?;
        if self.group_tables.insert(name.into(), t).is_some() {
            return Err(VaughtError::Duplicate(name.into()));
        }
        Ok(())
    }

    pub fn space_tables(&self) -> &BTreeMap<String, GradedTable> {
        &self.space_tables
    }

    pub fn group_tables(&self) -> &BTreeMap<String, GradedTable> {
        &self.group_tables
    }

    pub fn space_table(&self, name: &str) -> Result<&GradedTable, VaughtError> {
        self.space_tables.get(name).ok_or_else(|| VaughtError::Unknown(name.into()))
    }

    pub fn group_table(&self, name: &str) -> Result<&GradedTable, VaughtError> {
        self.group_tables.get(name).ok_or_else(|| VaughtError::Unknown(name.into()))
    }

    fn check_len(&self, t: &GradedTable, expected: usize) -> Result<(), VaughtError> {
        if t.len() != expected {
            return Err(VaughtError::TableSize { expected, found: t.len() });
        }
        Ok(())
    }

    /// Graded coset `Hg: h -> H(h g⁻¹)`.
    pub fn coset(&self, h: &GradedTable, g: usize) -> GradedTable {
        GradedTable((0..self.order()).map(|f| h.get(self.mul(f, self.inv(g))).clone()).collect())
    }

    /// Graded conjugate `H^g: h -> H(g h g⁻¹)`.
    pub fn conjugate(&self, h: &GradedTable, g: usize) -> GradedTable {
        GradedTable((0..self.order()).map(|f| h.get(self.mul(self.mul(g, f), self.inv(g))).clone()).collect())
    }

    /// `H(1) = 0`, symmetry and subadditivity, checked exactly.
    pub fn is_graded_subgroup(&self, h: &GradedTable) -> bool {
        let n = self.order();
        h.get(0) == &zero()
            && (0..n).all(|a| h.get(a) == h.get(self.inv(a)))
            && (0..n).all(|a| (0..n).all(|b| h.get(self.mul(a, b)) <= &dot_plus(h.get(a), h.get(b))))
    }

    /// `φ(g x) <= φ(x) ∔ H(g)` everywhere.
    pub fn is_invariant(&self, phi: &GradedTable, h: &GradedTable) -> bool {
        (0..self.order())
            .all(|g| (0..self.points.len()).all(|x| phi.get(self.act(g, x)) <= &dot_plus(phi.get(x), h.get(g))))
    }

    fn check_pair(&self, phi: &GradedTable, j: &GradedTable) -> Result<(), VaughtError> {
        self.check_len(phi, self.points.len())?;
        self.check_len(j, self.order())
    }
}

// ---------------------------------------------------------------- transforms

/// `min_h φ(h x) ∔ J(h)`.
pub fn vaught_delta_closed(x: &FiniteGSpace, phi: &GradedTable, j: &GradedTable) -> Result<GradedTable, VaughtError> {
    x.check_pair(phi, j)?;
    Ok(GradedTable(
        (0..x.points.len())
            .map(|p| (0..x.order()).map(|h| dot_plus(phi.get(x.act(h, p)), j.get(h))).min().expect("non-empty group"))
            .collect(),
    ))
}

/// `max_h φ(h x) ∸ J(h)`.
pub fn vaught_star_closed(x: &FiniteGSpace, phi: &GradedTable, j: &GradedTable) -> Result<GradedTable, VaughtError> {
    x.check_pair(phi, j)?;
    Ok(GradedTable(
        (0..x.points.len())
            .map(|p| (0..x.order()).map(|h| dot_minus(phi.get(x.act(h, p)), j.get(h))).max().expect("non-empty group"))
            .collect(),
    ))
}

/// Threshold grid: `0`, `1`, every value, and midpoints of neighbours.
fn threshold_grid<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Vec<Rational> {
    let mut base: BTreeSet<Rational> = values.into_iter().cloned().collect();
    base.insert(zero());
    base.insert(one());
    let v: Vec<Rational> = base.into_iter().collect();
    let mut out = v.clone();
    out.extend(v.windows(2).map(|w| (&w[0] + &w[1]) / Rational::from_integer(2.into())));
    out.sort();
    out
}

/// `inf { r ∔ s : {h : φ(h x) < r} meets J_{<s} }`, scanned over the grid.
///
/// Each grid value `t` is tried both literally and as `t⁺` (just above
/// `t`), where `< t⁺` reads as `<= t` and the objective is its limit.
pub fn vaught_delta_scan(x: &FiniteGSpace, phi: &GradedTable, j: &GradedTable) -> Result<GradedTable, VaughtError> {
    x.check_pair(phi, j)?;
    let grid = threshold_grid(phi.values().iter().chain(j.values()));
    let mut out = Vec::with_capacity(x.points.len());
    for p in 0..x.points.len() {
        let mut best = one();
        for r in &grid {
            for s in &grid {
                let value = dot_plus(r, s);
                if value >= best {
                    continue;
                }
                let meets = |strict: bool| {
                    (0..x.order()).any(|h| {
                        let (a, b) = (phi.get(x.act(h, p)), j.get(h));
                        if strict {
                            a < r && b < s
                        } else {
                            a <= r && b <= s
                        }
                    })
                };
                if meets(true) || meets(false) {
                    best = value;
                }
            }
        }
        out.push(best);
    }
    Ok(GradedTable(out))
}

/// `sup { r ∸ s : {h : φ(h x) <= r} does not contain J_{<s} }`, scanned
/// with `r` literal or `t⁻` and `s` literal or `t⁺`.
pub fn vaught_star_scan(x: &FiniteGSpace, phi: &GradedTable, j: &GradedTable) -> Result<GradedTable, VaughtError> {
    x.check_pair(phi, j)?;
    let grid = threshold_grid(phi.values().iter().chain(j.values()));
    let mut out = Vec::with_capacity(x.points.len());
    for p in 0..x.points.len() {
        let mut best = zero();
        for r in &grid {
            for s in &grid {
                let value = dot_minus(r, s);
                if value <= best {
                    continue;
                }
                let escapes = |strict: bool| {
                    (0..x.order()).any(|h| {
                        let (a, b) = (phi.get(x.act(h, p)), j.get(h));
                        if strict {
                            b < s && a > r
                        } else {
                            b <= s && a >= r
                        }
                    })
                };
                if escapes(true) || escapes(false) {
                    best = value;
                }
            }
        }
        out.push(best);
    }
    Ok(GradedTable(out))
}

/// `φ^{ΔJ}`, computed by the closed form and checked against the scan.
pub fn vaught_delta(x: &FiniteGSpace, phi: &GradedTable, j: &GradedTable) -> Result<GradedTable, VaughtError> {
    agree(vaught_delta_closed(x, phi, j)?, vaught_delta_scan(x, phi, j)?)
}

/// `φ^{*J}`, computed by the closed form and checked against the scan.
pub fn vaught_star(x: &FiniteGSpace, phi: &GradedTable, j: &GradedTable) -> Result<GradedTable, VaughtError> {
    agree(vaught_star_closed(x, phi, j)?, vaught_star_scan(x, phi, j)?)
}

fn agree(closed: GradedTable, scan: GradedTable) -> Result<GradedTable, VaughtError> {
    match (0..closed.len()).find(|&i| closed.get(i) != scan.get(i)) {
        Some(point) => Err(VaughtError::ScanMismatch { point }),
        None => Ok(closed),
    }
}

/// `(A^{*u}, A^{Δu})`.
pub fn vaught_sets(
    x: &FiniteGSpace,
    a: &BTreeSet<usize>,
    u: &BTreeSet<usize>,
) -> Result<(BTreeSet<usize>, BTreeSet<usize>), VaughtError> {
    if u.is_empty() {
        return Err(VaughtError::EmptySubset);
    }
    if let Some(&i) = a.iter().find(|&&i| i >= x.points.len()) {
        return Err(VaughtError::Index(i));
    }
    if let Some(&i) = u.iter().find(|&&i| i >= x.order()) {
        return Err(VaughtError::Index(i));
    }
    let star = (0..x.points.len()).filter(|&p| u.iter().all(|&h| a.contains(&x.act(h, p)))).collect();
    let delta = (0..x.points.len()).filter(|&p| u.iter().any(|&h| a.contains(&x.act(h, p)))).collect();
    Ok((star, delta))
}

// ---------------------------------------------------------------- nice closure

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureResult {
    pub family: Vec<GradedTable>,
    pub applications: usize,
    pub fixed_point: bool,
}

/// Closes `family` under `¬`, `min`, `max`, `|·−·|`, `∸`, `∔`, dotted
/// scaling by `scales`, and both transforms by every table in `cosets`,
/// stopping after `budget` operation applications.
pub fn nice_closure(
    x: &FiniteGSpace,
    family: &[GradedTable],
    cosets: &[GradedTable],
    scales: &[Rational],
    budget: usize,
) -> Result<ClosureResult, VaughtError> {
    for t in family {
        x.check_len(t, x.points.len())?;
    }
    for t in cosets {
        x.check_len(t, x.order())?;
    }
    let mut out: Vec<GradedTable> = Vec::new();
    let mut seen = BTreeSet::new();
    for t in family {
        if seen.insert(t.clone()) {
            out.push(t.clone());
        }
    }
    let mut applications = 0;
    let mut done = 0; // members [0, done) have been combined with each other
    loop {
        let frontier = out.len();
        if frontier == done {
            return Ok(ClosureResult { family: out, applications, fixed_point: true });
        }
        let mut produced = Vec::new();
        for i in done..frontier {
            let a = &out[i];
            produced.push(a.map(neg));
            for c in scales {
                produced.push(a.map(|v| dot_scale(c, v)));
            }
            for rho in cosets {
                produced.push(vaught_delta_closed(x, a, rho)?);
                produced.push(vaught_star_closed(x, a, rho)?);
            }
            for b in &out[..frontier] {
                produced.push(a.zip(b, |u, v| u.min(v).clone()));
                produced.push(a.zip(b, |u, v| u.max(v).clone()));
                produced.push(a.zip(b, |u, v| (u - v).abs()));
                produced.push(a.zip(b, dot_minus));
                produced.push(b.zip(a, dot_minus));
                produced.push(a.zip(b, dot_plus));
            }
        }
        for t in produced {
            if applications >= budget {
                return Ok(ClosureResult { family: out, applications, fixed_point: false });
            }
            applications += 1;
            if seen.insert(t.clone()) {
                out.push(t);
            }
        }
        done = frontier;
    }
}

// ---------------------------------------------------------------- lemma suite

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub statement: &'static str,
    pub checks: usize,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaSuiteReport {
    pub instances: usize,
    pub lemmas: Vec<LemmaCheck>,
}

impl LemmaSuiteReport {
    pub fn passed(&self) -> bool {
        self.lemmas.iter().all(|l| l.violations.is_empty())
    }

    pub fn lemma(&self, name: &str) -> Option<&LemmaCheck> {
        self.lemmas.iter().find(|l| l.name == name)
    }
}

/// A randomized instance: a G-space with value grid `k/8`, a graded
/// subgroup `H`, and arbitrary graded tables.
#[derive(Debug, Clone)]
pub struct SuiteInstance {
    pub space: FiniteGSpace,
    pub subgroup: GradedTable,
    pub phis: Vec<GradedTable>,
    pub js: Vec<GradedTable>,
}

fn grid_value<R: Rng>(rng: &mut R) -> Rational {
    q(rng.gen_range(0..=8), 8)
}

/// Random permutation group of order at most `max_order` on at most
/// `max_points` points, by retrying small-support generators.
pub fn random_gspace<R: Rng>(rng: &mut R, max_points: usize, max_order: usize) -> FiniteGSpace {
    loop {
        let n = rng.gen_range(2..=max_points);
        let points = (0..n).map(|i| format!("p{i}")).collect();
        let gens = rng.gen_range(1..=2);
        let generators = (0..gens)
            .map(|k| {
                let mut perm: Vec<usize> = (0..n).collect();
                let support = rng.gen_range(2..=n.min(4));
                let mut chosen: Vec<usize> = rand::seq::index::sample(rng, n, support).into_vec();
                let images = {
                    let mut c = chosen.clone();
                    c.rotate_left(rng.gen_range(1..support));
                    c
                };
                for (a, b) in chosen.drain(..).zip(images) {
                    perm[a] = b;
                }
                (["s", "t"][k].to_string(), perm)
            })
            .collect();
        if let Ok(space) = FiniteGSpace::generated(points, generators, max_order) {
            return space;
        }
    }
}

/// Weighted moved-point count `min(1, Σ w_i [g moves i])`, a graded subgroup.
fn random_subgroup<R: Rng>(rng: &mut R, x: &FiniteGSpace) -> GradedTable {
    let weights: Vec<Rational> =
        (0..x.points.len()).map(|_| if rng.gen_bool(0.5) { q(rng.gen_range(1..=8), 8) } else { zero() }).collect();
    GradedTable(
        (0..x.order())
            .map(|g| {
                let s: Rational = (0..x.points.len()).filter(|&i| x.act(g, i) != i).map(|i| weights[i].clone()).sum();
                s.min(one())
            })
            .collect(),
    )
}

pub fn random_suite_instance<R: Rng>(rng: &mut R) -> SuiteInstance {
    let space = random_gspace(rng, 12, 24);
    let subgroup = random_subgroup(rng, &space);
    let table = |rng: &mut R, len: usize| GradedTable((0..len).map(|_| grid_value(rng)).collect());
    let phis = (0..3).map(|_| table(rng, space.points.len())).collect();
    let js = (0..3).map(|_| table(rng, space.order())).collect();
    SuiteInstance { space, subgroup, phis, js }
}

struct Recorder {
    lemmas: Vec<LemmaCheck>,
}

impl Recorder {
    fn check(&mut self, idx: usize, ok: bool, witness: impl FnOnce() -> String) {
        let l = &mut self.lemmas[idx];
        l.checks += 1;
        if !ok && l.violations.len() < 20 {
            l.violations.push(witness());
        }
    }
}

const CLOSED_FORM: usize = 0;
const CORRESPONDENCE: usize = 1;
const DUALITY: usize = 2;
const ORDER: usize = 3;
const INVARIANCE: usize = 4;
const FIXED_POINT: usize = 5;
const CONJUGATE: usize = 6;
const CLOSURE: usize = 7;

/// Runs every transform identity over `count` random instances.
///
/// Restrictions of the discrete model: `Δ ≤ *` is checked only for `J`
/// with `J(1) = 0`; the closure inclusion is checked with closure taken as
/// the identity; of the set/graded correspondence for graded `J`, only the
/// `Δ` half is checked.
pub fn lemma_suite<R: Rng>(rng: &mut R, count: usize) -> LemmaSuiteReport {
    let names: [(&'static str, &'static str); 8] = [
        ("closed-form", "threshold scans equal the min/max closed forms"),
        ("correspondence", "(φ_<r)^Δu = (φ^ΔO_u)_<r, (φ_≤r)^*u = (φ^*O_u)_≤r, A^Δ(J_<r) = (O_A^ΔJ)_<r"),
        ("duality", "φ^*J = 1 − (1−φ)^ΔJ"),
        ("order", "φ^ΔJ ≤ φ^*J when J(1) = 0"),
        ("invariance", "|φ^*H(hx) − φ^*H(x)| ≤ H(h), same for Δ; φ^ΔH ≤ φ"),
        ("fixed-point", "φ H-invariant ⇒ φ^*H = φ = φ^ΔH"),
        ("conjugate", "φ^Δρ, φ^*ρ are H^g-invariant for ρ = Hg"),
        ("closure", "φ_<r ⊆ H_<ε ψ_<t ⇒ (φ^ΔH)_<r ⊆ H_<r (ψ^ΔH)_<t+ε"),
    ];
    let mut rec = Recorder {
        lemmas: names
            .iter()
            .map(|&(name, statement)| LemmaCheck { name, statement, checks: 0, violations: Vec::new() })
            .collect(),
    };
    let thresholds: Vec<Rational> = (1..=16).map(|k| q(k, 16)).collect();
    for inst in 0..count {
        let SuiteInstance { space: x, subgroup: h, phis, js } = random_suite_instance(rng);
        assert!(x.is_graded_subgroup(&h), "generator produced a non-subgroup");
        let npts = x.points.len();
        let ord = x.order();
        let tag = |what: &str| format!("instance {inst}: {what}");
        let mut js_all = js.clone();
        js_all.push(h.clone());
        js_all.push(GradedTable::constant(ord, zero()));

        for phi in &phis {
            for j in &js_all {
                let (dc, ds) = (vaught_delta_closed(&x, phi, j).unwrap(), vaught_delta_scan(&x, phi, j).unwrap());
                rec.check(CLOSED_FORM, dc == ds, || tag("Δ scan"));
                let (sc, ss) = (vaught_star_closed(&x, phi, j).unwrap(), vaught_star_scan(&x, phi, j).unwrap());
                rec.check(CLOSED_FORM, sc == ss, || tag("* scan"));

                let dual = vaught_delta_closed(&x, &phi.map(neg), j).unwrap().map(neg);
                rec.check(DUALITY, dual == sc, || tag("duality"));

                if j.get(0) == &zero() {
                    let ok = (0..npts).all(|p| dc.get(p) <= sc.get(p));
                    rec.check(ORDER, ok, || tag("Δ ≤ *"));
                }

                // Set/graded correspondence for graded J and A = φ_<r.
                for r in &thresholds {
                    let a = phi.below(r);
                    let oa = GradedTable::characteristic(npts, &a);
                    let lhs: BTreeSet<usize> =
                        (0..npts).filter(|&p| (0..ord).any(|g| j.get(g) < r && a.contains(&x.act(g, p)))).collect();
                    let rhs = vaught_delta_closed(&x, &oa, j).unwrap().below(r);
                    rec.check(CORRESPONDENCE, lhs == rhs, || tag(&format!("A^Δ(J_<r), r = {}", Frac(r))));
                }
            }

            // Correspondence for open u = J_<s, non-empty.
            for j in &js {
                for s in &thresholds {
                    let u = j.below(s);
                    if u.is_empty() {
                        continue;
                    }
                    let ou = GradedTable::characteristic(ord, &u);
                    let d = vaught_delta_closed(&x, phi, &ou).unwrap();
                    let st = vaught_star_closed(&x, phi, &ou).unwrap();
                    for r in &thresholds {
                        let (_, lhs_d) = vaught_sets(&x, &phi.below(r), &u).unwrap();
                        rec.check(CORRESPONDENCE, lhs_d == d.below(r), || tag("(φ_<r)^Δu"));
                        let (lhs_s, _) = vaught_sets(&x, &phi.at_most(r), &u).unwrap();
                        rec.check(CORRESPONDENCE, lhs_s == st.at_most(r), || tag("(φ_≤r)^*u"));
                    }
                }
            }

            // Invariance under the graded subgroup.
            let dh = vaught_delta_closed(&x, phi, &h).unwrap();
            let sh = vaught_star_closed(&x, phi, &h).unwrap();
            rec.check(INVARIANCE, (0..npts).all(|p| dh.get(p) <= phi.get(p)), || tag("φ^ΔH ≤ φ"));
            for t in [&dh, &sh] {
                let ok = (0..ord).all(|g| (0..npts).all(|p| (t.get(x.act(g, p)) - t.get(p)).abs() <= *h.get(g)));
                rec.check(INVARIANCE, ok, || tag("H-invariance of a transform"));
            }

            // Fixed points: transforms of φ and orbit-constant tables are H-invariant.
            let orbit_min =
                GradedTable((0..npts).map(|p| (0..ord).map(|g| phi.get(x.act(g, p)).clone()).min().unwrap()).collect());
            for psi in [dh.clone(), sh.clone(), orbit_min, phi.clone()] {
                if x.is_invariant(&psi, &h) {
                    let ok = vaught_delta_closed(&x, &psi, &h).unwrap() == psi
                        && vaught_star_closed(&x, &psi, &h).unwrap() == psi;
                    rec.check(FIXED_POINT, ok, || tag("fixed point"));
                }
            }

            // Conjugates and cosets.
            for g in 0..ord {
                let rho = x.coset(&h, g);
                let hg = x.conjugate(&h, g);
                for t in [vaught_delta_closed(&x, phi, &rho).unwrap(), vaught_star_closed(&x, phi, &rho).unwrap()] {
                    let ok = (0..ord).all(|k| (0..npts).all(|p| t.get(x.act(k, p)) <= &dot_plus(t.get(p), hg.get(k))));
                    rec.check(CONJUGATE, ok, || tag(&format!("coset by {}", x.names[g])));
                }
            }

            // Closure inclusion, closure = identity in the discrete model.
            for psi in &phis {
                for r in thresholds.iter().step_by(2) {
                    for t in thresholds.iter().step_by(4) {
                        for eps in [q(1, 8), q(1, 2)] {
                            let hyp = phi
                                .below(r)
                                .into_iter()
                                .all(|p| (0..ord).any(|k| h.get(k) < &eps && psi.get(x.act(x.inv(k), p)) < t));
                            if !hyp {
                                continue;
                            }
                            let psi_d = vaught_delta_closed(&x, psi, &h).unwrap();
                            let bound = t + &eps;
                            let ok = dh
                                .below(r)
                                .into_iter()
                                .all(|p| (0..ord).any(|k| h.get(k) < r && psi_d.get(x.act(x.inv(k), p)) < &bound));
                            rec.check(CLOSURE, ok, || tag("closure inclusion"));
                        }
                    }
                }
            }
        }
    }
    LemmaSuiteReport { instances: count, lemmas: rec.lemmas }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn swap() -> FiniteGSpace {
        FiniteGSpace::generated(vec!["x".into(), "y".into()], vec![("s".into(), vec![1, 0])], 24).unwrap()
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn group_closure() {
        let x = swap();
        assert_eq!(x.order(), 2);
        assert_eq!(x.element_names(), ["e", "s"]);
        assert_eq!(x.mul(1, 1), 0);
        let s3 = FiniteGSpace::generated(
            (0..3).map(|i| i.to_string()).collect(),
            vec![("a".into(), vec![1, 2, 0]), ("b".into(), vec![1, 0, 2])],
            24,
        )
        .unwrap();
        assert_eq!(s3.order(), 6);
        assert!(FiniteGSpace::generated(vec!["x".into()], vec![("s".into(), vec![1])], 24).is_err());
    }

    #[test]
    fn delta_examples() {
        let x = swap();
        let phi = GradedTable::characteristic(2, &set(&[0]));
        let zero_j = GradedTable::constant(2, zero());
        assert_eq!(vaught_delta(&x, &phi, &zero_j).unwrap(), GradedTable::constant(2, zero()));
        let ones = GradedTable::constant(2, one());
        assert_eq!(vaught_delta(&x, &ones, &GradedTable::new(vec![zero(), q(1, 3)]).unwrap()).unwrap(), ones);

        let triv = FiniteGSpace::generated(vec!["x".into(), "y".into()], vec![], 24).unwrap();
        let phi = GradedTable::new(vec![q(1, 4), q(7, 8)]).unwrap();
        let j = GradedTable::new(vec![q(1, 4)]).unwrap();
        assert_eq!(vaught_delta(&triv, &phi, &j).unwrap().values(), [q(1, 2), one()]);
        assert_eq!(vaught_star(&triv, &phi, &j).unwrap().values(), [zero(), q(5, 8)]);
    }

    #[test]
    fn star_examples() {
        let x = swap();
        let phi = GradedTable::new(vec![q(1, 8), q(3, 4)]).unwrap();
        let j = GradedTable::new(vec![zero(), q(1, 2)]).unwrap();
        let st = vaught_star(&x, &phi, &j).unwrap();
        let dual = vaught_delta(&x, &phi.map(neg), &j).unwrap().map(neg);
        assert_eq!(st, dual);
        let c = GradedTable::constant(2, q(3, 8));
        assert_eq!(vaught_star(&x, &c, &GradedTable::constant(2, zero())).unwrap(), c);
    }

    #[test]
    fn set_examples() {
        let x = swap();
        let g = set(&[0, 1]);
        assert_eq!(vaught_sets(&x, &set(&[0]), &g).unwrap(), (set(&[]), set(&[0, 1])));
        assert_eq!(vaught_sets(&x, &set(&[0, 1]), &g).unwrap(), (set(&[0, 1]), set(&[0, 1])));
        assert_eq!(vaught_sets(&x, &set(&[0]), &set(&[0])).unwrap(), (set(&[0]), set(&[0])));
        assert_eq!(vaught_sets(&x, &set(&[0]), &set(&[])), Err(VaughtError::EmptySubset));
    }

    #[test]
    fn closure_examples() {
        let x = swap();
        let consts = [GradedTable::constant(2, zero()), GradedTable::constant(2, one())];
        let og = GradedTable::constant(2, zero());
        let r = nice_closure(&x, &consts, std::slice::from_ref(&og), &[q(2, 1)], 1000).unwrap();
        assert!(r.fixed_point);
        assert_eq!(r.family.len(), 2);

        let oa = GradedTable::characteristic(2, &set(&[0]));
        let r = nice_closure(&x, std::slice::from_ref(&oa), std::slice::from_ref(&og), &[], 1000).unwrap();
        assert!(r.family.contains(&GradedTable::constant(2, zero())));
        let r = nice_closure(&x, std::slice::from_ref(&oa), &[og], &[], 0).unwrap();
        assert_eq!(r.family, vec![oa]);
        assert!(!r.fixed_point);
    }

    #[test]
    fn suite_small_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let report = lemma_suite(&mut rng, 5);
        for l in &report.lemmas {
            assert!(l.violations.is_empty(), "{}: {:?}", l.name, l.violations);
            assert!(l.checks > 0, "{} never exercised", l.name);
        }
    }
}
