//! Encoding points of a finite G-space as metric structures, and checking
//! that orbit equivalence matches isomorphism.

use std::collections::{BTreeMap, BTreeSet};

use num::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::finite::{tuples, FiniteStructure, StructureError};
use crate::formula::{Signature, SignatureError};
use crate::metric::RationalMetricSpace;
use crate::rational::{one, q, zero, Rational};
use crate::vaught::{FiniteGSpace, VaughtError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("generator `{0}` does not map Y to Y and X to X")]
    Mixed(String),
    #[error("element `{0}` is not an isometry of Y")]
    NotIsometry(String),
    #[error("the group does not act faithfully on Y")]
    NotFaithful,
    #[error("basis set `{0}` is empty")]
    EmptyBasis(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("enumeration is not a permutation of Y")]
    Enumeration,
    #[error("arity {k} exceeds |Y| = {n}")]
    Arity { k: usize, n: usize },
    #[error(transparent)]
    Group(#[from] VaughtError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// One group element with its actions on `Y` and on `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElement {
    pub name: String,
    pub on_y: Vec<usize>,
    pub on_x: Vec<usize>,
}

/// `Y` with an isometry group `G`, a G-space `X` with metric `d^τ`, and a
/// finite basis of subsets of `X`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionInstance {
    y: RationalMetricSpace,
    x: RationalMetricSpace,
    generators: Vec<(String, Vec<usize>, Vec<usize>)>,
    elements: Vec<GroupElement>,
    basis: Vec<(String, BTreeSet<usize>)>,
    enumeration: Vec<usize>,
}

impl ReductionInstance {
    /// Generators are given as images on `Y` and on `X`; the group is their
    /// closure and must act faithfully by isometries on `Y`.
    pub fn new(
        y: RationalMetricSpace,
        x: RationalMetricSpace,
        generators: Vec<(String, Vec<usize>, Vec<usize>)>,
        basis: Vec<(String, BTreeSet<usize>)>,
        enumeration: Option<Vec<usize>>,
    ) -> Result<Self, ReductionError> {
        let (ny, nx) = (y.len(), x.len());
        let union: Vec<String> = (0..ny).map(|i| format!("y{i}")).chain((0..nx).map(|i| format!("x{i}"))).collect();
        let mut gens = Vec::new();
        for (name, gy, gx) in &generators {
            if gy.len() != ny || gx.len() != nx || gy.iter().any(|&v| v >= ny) || gx.iter().any(|&v| v >= nx) {
                return Err(ReductionError::Mixed(name.clone()));
            }
            gens.push((name.clone(), gy.iter().copied().chain(gx.iter().map(|&v| v + ny)).collect()));
        }
        let group = FiniteGSpace::generated(union, gens, 5040)?;
        let mut elements = Vec::new();
        let mut seen = BTreeSet::new();
        for (g, name) in group.element_names().iter().enumerate() {
            let on_y: Vec<usize> = (0..ny).map(|i| group.act(g, i)).collect();
            let on_x: Vec<usize> = (0..nx).map(|i| group.act(g, ny + i) - ny).collect();
            if (0..ny).any(|i| (0..ny).any(|j| y.d(on_y[i], on_y[j]) != y.d(i, j))) {
                return Err(ReductionError::NotIsometry(name.clone()));
            }
            if !seen.insert(on_y.clone()) {
                return Err(ReductionError::NotFaithful);
            }
            elements.push(GroupElement { name: name.clone(), on_y, on_x });
        }
        for (name, set) in &basis {
            if set.is_empty() {
                return Err(ReductionError::EmptyBasis(name.clone()));
            }
            if let Some(&p) = set.iter().find(|&&p| p >= nx) {
                return Err(ReductionError::UnknownPoint(format!("#{p}")));
            }
        }
        let enumeration = enumeration.unwrap_or_else(|| (0..ny).collect());
        let as_set: BTreeSet<usize> = enumeration.iter().copied().collect();
        if enumeration.len() != ny || as_set.len() != ny || as_set.iter().any(|&p| p >= ny) {
            return Err(ReductionError::Enumeration);
        }
        Ok(ReductionInstance { y, x, generators, elements, basis, enumeration })
    }

    pub fn y(&self) -> &RationalMetricSpace {
        &self.y
    }

    pub fn x(&self) -> &RationalMetricSpace {
        &self.x
    }

    pub fn generators(&self) -> &[(String, Vec<usize>, Vec<usize>)] {
        &self.generators
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn basis(&self) -> &[(String, BTreeSet<usize>)] {
        &self.basis
    }

    pub fn enumeration(&self) -> &[usize] {
        &self.enumeration
    }

    /// Every pair of distinct points is split by some basis set.
    pub fn basis_separates(&self) -> bool {
        let n = self.x.len();
        (0..n).all(|a| (a + 1..n).all(|b| self.basis.iter().any(|(_, s)| s.contains(&a) != s.contains(&b))))
    }

    /// The signature `R{k}_{l}` for `1 <= k <= k_max`, every basis index `l`.
    pub fn signature(&self, k_max: usize) -> Result<Signature, ReductionError> {
        let mut sig = Signature::new();
        for k in 1..=k_max {
            for l in 0..self.basis.len() {
                sig = sig.with_relation_modulus(&relation_name(k, l), k, one())?;
            }
        }
        Ok(sig)
    }
}

pub fn relation_name(k: usize, l: usize) -> String {
    format!("R{k}_{l}")
}

/// `inf { max(d(h ȳ, s̄), d^τ(h x, x')) : x' ∈ A_l, h ∈ G }`.
pub fn encoded_value(inst: &ReductionInstance, x: usize, l: usize, ybar: &[usize]) -> Rational {
    let s = &inst.enumeration[..ybar.len()];
    let set = &inst.basis[l].1;
    let mut best = one();
    for g in &inst.elements {
        let mut disp = zero();
        for (&yi, &si) in ybar.iter().zip(s) {
            disp = disp.max(inst.y.d(g.on_y[yi], si).clone());
        }
        if disp >= best {
            continue;
        }
        let hx = g.on_x[x];
        let to_set = set.iter().map(|&a| inst.x.d(hx, a)).min().expect("non-empty basis set").clone();
        best = best.min(disp.max(to_set));
        if best.is_zero() {
            break;
        }
    }
    best
}

/// `M(x)` with relations up to arity `k_max`.
///
/// The value is a min of maxes of existing distances, so the tables are
/// computed on the ranks of the distinct distance values and mapped back.
pub fn encode(inst: &ReductionInstance, x: usize, k_max: usize) -> Result<FiniteStructure, ReductionError> {
    let n = inst.y.len();
    if k_max > n {
        return Err(ReductionError::Arity { k: k_max, n });
    }
    if x >= inst.x.len() {
        return Err(ReductionError::UnknownPoint(format!("#{x}")));
    }
    let sig = inst.signature(k_max)?;
    let (ny, nx) = (inst.y.len(), inst.x.len());
    let values: Vec<Rational> = (0..ny)
        .flat_map(|i| (0..ny).map(move |j| inst.y.d(i, j).clone()))
        .chain((0..nx).flat_map(|i| (0..nx).map(move |j| inst.x.d(i, j).clone())))
        .chain([one()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rank = |v: &Rational| values.binary_search(v).expect("listed value");
    let ry: Vec<Vec<usize>> = (0..ny).map(|i| (0..ny).map(|j| rank(inst.y.d(i, j))).collect()).collect();
    let top = rank(&one());
    // to_set[g][l] = d^τ(g x, A_l), as a rank.
    let to_set: Vec<Vec<usize>> = inst
        .elements
        .iter()
        .map(|g| {
            let gx = g.on_x[x];
            inst.basis
                .iter()
                .map(|(_, set)| set.iter().map(|&a| rank(inst.x.d(gx, a))).min().expect("non-empty"))
                .collect()
        })
        .collect();
    let s = &inst.enumeration;
    let mut tables = BTreeMap::new();
    for k in 1..=k_max {
        let mut per_l: Vec<Vec<Rational>> = vec![Vec::new(); inst.basis.len()];
        for t in tuples(n, k) {
            let disp: Vec<usize> = inst
                .elements
                .iter()
                .map(|g| t.iter().zip(s).map(|(&yi, &si)| ry[g.on_y[yi]][si]).max().unwrap_or(0))
                .collect();
            for (l, col) in per_l.iter_mut().enumerate() {
                let best = disp.iter().zip(&to_set).map(|(&d, ts)| d.max(ts[l])).min().unwrap_or(top).min(top);
                col.push(values[best].clone());
            }
        }
        for (l, col) in per_l.into_iter().enumerate() {
            tables.insert(relation_name(k, l), col);
        }
    }
    // An infimum of 1-Lipschitz functions is 1-Lipschitz, so the pairwise
    // modulus check (quadratic in the table size) is skipped.
    Ok(FiniteStructure::new_unchecked_modulus(inst.y.clone(), sig, tables, BTreeMap::new())?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitEquivalence {
    pub same_orbit: bool,
    pub isomorphic: bool,
    /// First group element (in element order) with `g x = x'`.
    pub group_witness: Option<String>,
    /// First isometry of `Y` (lexicographic) carrying `M(x)` onto `M(x')`.
    pub isometry_witness: Option<Vec<usize>>,
}

/// Orbit equivalence by enumerating `G`; isomorphism by brute force over
/// every isometry of `Y`, with full-arity encodings.
pub fn orbit_equiv(inst: &ReductionInstance, x: usize, x2: usize) -> Result<OrbitEquivalence, ReductionError> {
    let n = inst.y.len();
    let (m, m2) = (encode(inst, x, n)?, encode(inst, x2, n)?);
    Ok(compare(inst, &inst.y.isometries(), x, &m, x2, &m2))
}

/// [`orbit_equiv`] for every ordered pair, encoding each point once.
pub fn orbit_equiv_all(inst: &ReductionInstance) -> Result<Vec<(usize, usize, OrbitEquivalence)>, ReductionError> {
    let n = inst.y.len();
    let encoded = (0..inst.x.len()).map(|x| encode(inst, x, n)).collect::<Result<Vec<_>, _>>()?;
    let isos = inst.y.isometries();
    let mut out = Vec::new();
    for (x, m) in encoded.iter().enumerate() {
        for (x2, m2) in encoded.iter().enumerate() {
            out.push((x, x2, compare(inst, &isos, x, m, x2, m2)));
        }
    }
    Ok(out)
}

fn compare(
    inst: &ReductionInstance,
    isos: &[Vec<usize>],
    x: usize,
    m: &FiniteStructure,
    x2: usize,
    m2: &FiniteStructure,
) -> OrbitEquivalence {
    let group_witness = inst.elements.iter().find(|g| g.on_x[x] == x2).map(|g| g.name.clone());
    let isometry_witness = isos.iter().find(|f| carries(m, m2, f)).cloned();
    OrbitEquivalence {
        same_orbit: group_witness.is_some(),
        isomorphic: isometry_witness.is_some(),
        group_witness,
        isometry_witness,
    }
}

/// `R^{m2}(f ȳ) = R^m(ȳ)` for every relation and tuple; stops at the first miss.
fn carries(m: &FiniteStructure, m2: &FiniteStructure, f: &[usize]) -> bool {
    let n = m.space().len();
    m.sig().relations().iter().all(|r| {
        let (a, b) = (&m.tables()[&r.name], &m2.tables()[&r.name]);
        tuples(n, r.arity).enumerate().all(|(i, t)| {
            let j = t.iter().fold(0, |acc, &y| acc * n + f[y]);
            a[i] == b[j]
        })
    })
}

/// `M(g x) = g(M(x))` for every `g`; returns the offending element names.
pub fn check_invariance(inst: &ReductionInstance, x: usize, k_max: usize) -> Result<Vec<String>, ReductionError> {
    let m = encode(inst, x, k_max)?;
    let mut cache: BTreeMap<usize, FiniteStructure> = BTreeMap::new();
    let mut bad = Vec::new();
    for g in &inst.elements {
        let gx = g.on_x[x];
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(gx) {
            e.insert(encode(inst, gx, k_max)?);
        }
        if !carries(&m, &cache[&gx], &g.on_y) {
            bad.push(g.name.clone());
        }
    }
    Ok(bad)
}

/// A random instance with `|Y| <= max_y`, `|X| <= max_x` and a separating
/// basis (every singleton, plus random extra sets).
///
/// The metric on `Y` is G-invariant with values in `[1/2, 1]`; `X` is built
/// from orbits of points and of unordered pairs of `Y`, plus fixed points.
pub fn random_instance<R: Rng>(rng: &mut R, max_y: usize, max_x: usize) -> ReductionInstance {
    assert!(max_y >= 2 && max_x >= 1);
    let ny = rng.gen_range(2..=max_y);
    let ynames: Vec<String> = (0..ny).map(|i| format!("y{i}")).collect();
    let gens: Vec<(String, Vec<usize>)> = (0..rng.gen_range(1..=2))
        .map(|k| {
            let mut perm: Vec<usize> = (0..ny).collect();
            let support = rng.gen_range(2..=ny.min(3));
            let mut chosen: Vec<usize> = rand::seq::index::sample(rng, ny, support).into_vec();
            let from = chosen.clone();
            chosen.rotate_left(1);
            for (a, b) in from.into_iter().zip(chosen) {
                perm[a] = b;
            }
            (["s", "t"][k].to_string(), perm)
        })
        .collect();
    let g = FiniteGSpace::generated(ynames.clone(), gens.clone(), 5040).expect("small symmetric group");
    let order = g.order();

    // Invariant metric: one value per orbit of unordered pairs.
    let mut pair_value: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
    for a in 0..ny {
        for b in a + 1..ny {
            if pair_value.contains_key(&(a, b)) {
                continue;
            }
            let v = q(rng.gen_range(4..=8), 8);
            for e in 0..order {
                let (u, w) = (g.act(e, a), g.act(e, b));
                pair_value.insert((u.min(w), u.max(w)), v.clone());
            }
        }
    }
    let y = RationalMetricSpace::from_fn(ynames, |i, j| pair_value[&(i.min(j), i.max(j))].clone())
        .expect("values in [1/2, 1]");

    // X as a union of orbits.
    #[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
    enum Part {
        Point(usize, usize),
        Pair(usize, usize, usize),
        Fixed(usize),
    }
    let mut xs: Vec<Part> = Vec::new();
    let mut copy = 0;
    while xs.len() < max_x {
        let room = max_x - xs.len();
        let orbit: Vec<Part> = match rng.gen_range(0..3) {
            0 if ny <= room => (0..ny).map(|i| Part::Point(copy, i)).collect(),
            1 => {
                let a = rng.gen_range(0..ny);
                let b = (a + rng.gen_range(1..ny)) % ny;
                let set: BTreeSet<(usize, usize)> = (0..order)
                    .map(|e| {
                        let (u, w) = (g.act(e, a), g.act(e, b));
                        (u.min(w), u.max(w))
                    })
                    .collect();
                if set.len() > room {
                    continue;
                }
                set.into_iter().map(|(u, w)| Part::Pair(copy, u, w)).collect()
            }
            _ => vec![Part::Fixed(copy)],
        };
        copy += 1;
        xs.extend(orbit);
        if rng.gen_bool(0.3) {
            break;
        }
    }
    let nx = xs.len();
    let index: BTreeMap<Part, usize> = xs.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let act_x = |perm: &[usize]| -> Vec<usize> {
        xs.iter()
            .map(|p| {
                let img = match *p {
                    Part::Point(c, i) => Part::Point(c, perm[i]),
                    Part::Pair(c, a, b) => Part::Pair(c, perm[a].min(perm[b]), perm[a].max(perm[b])),
                    Part::Fixed(c) => Part::Fixed(c),
                };
                index[&img]
            })
            .collect()
    };
    let generators = gens.iter().map(|(name, p)| (name.clone(), p.clone(), act_x(p))).collect();
    let x = RationalMetricSpace::from_fn((0..nx).map(|i| format!("x{i}")).collect(), |_, _| q(rng.gen_range(4..=8), 8))
        .expect("values in [1/2, 1]");

    let mut basis: Vec<(String, BTreeSet<usize>)> = (0..nx).map(|i| (format!("A{i}"), BTreeSet::from([i]))).collect();
    for extra in 0..rng.gen_range(0..=2) {
        let mut pts: Vec<usize> = (0..nx).collect();
        pts.shuffle(rng);
        let take = rng.gen_range(1..=nx);
        basis.push((format!("B{extra}"), pts.into_iter().take(take).collect()));
    }
    let mut enumeration: Vec<usize> = (0..ny).collect();
    enumeration.shuffle(rng);
    ReductionInstance::new(y, x, generators, basis, Some(enumeration)).expect("generated instance is valid")
}
