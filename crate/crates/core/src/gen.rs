//! Seeded random instance generators shared by the test suites and the
//! command-line `lemma-suite`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::finite::FiniteStructure;
use crate::formula::build::{
    abs_diff, cst, dist, dot_minus, dot_plus, half, inf, konst, max, min, neg, rel, scale, sup, var,
};
use crate::formula::{Formula, Signature, Term};
use crate::metric::{check_amalgamation_hypotheses, displacement_factor, RationalMetricSpace};
use crate::rational::{dot_plus as plus, neg as complement, one, q, zero, Rational};

/// An instance satisfying the amalgamation hypotheses.
#[derive(Debug, Clone)]
pub struct AmalgamationInstance {
    pub a_space: RationalMetricSpace,
    pub a_points: Vec<String>,
    pub b_space: RationalMetricSpace,
    pub shared: usize,
    pub eps: Rational,
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// A random metric on `n` points. Alternates between three shapes so that
/// geodesic triples occur: distances from `[1/2, 1]`, a coarse grid where
/// `1/2 + 1/2 = 1` is common, and points on a segment.
pub fn random_space<R: Rng>(rng: &mut R, prefix: &str, n: usize) -> RationalMetricSpace {
    loop {
        let shape = rng.gen_range(0..3);
        let points = names(prefix, n);
        let space = match shape {
            0 => RationalMetricSpace::from_fn(points, |_, _| q(rng.gen_range(10..=20), 20)),
            1 => RationalMetricSpace::from_fn(points, |_, _| q(rng.gen_range(2..=4), 4)),
            _ => {
                let mut xs: Vec<i64> = (0..=12).collect();
                xs.shuffle(rng);
                let xs: Vec<i64> = xs.into_iter().take(n).collect();
                RationalMetricSpace::from_fn(points, |i, j| q((xs[i] - xs[j]).abs(), 12))
            }
        };
        if let Ok(s) = space {
            return s;
        }
    }
}

/// A random valid amalgamation instance with `n` points and `shared` prefix.
pub fn random_amalgamation<R: Rng>(rng: &mut R, n: usize, shared: usize) -> AmalgamationInstance {
    assert!(shared < n && n >= 2);
    loop {
        let a_space = random_space(rng, "a", n);
        let k = displacement_factor(n, shared);
        // Smallest positive quantity that K*eps has to stay below.
        let mut bound: Option<Rational> = None;
        let mut keep = |v: Rational| {
            if v > zero() && bound.as_ref().is_none_or(|b| v < *b) {
                bound = Some(v);
            }
        };
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    keep(a_space.d(i, j).clone());
                }
                for l in 0..n {
                    if i != j && i != l && j != l {
                        keep(a_space.d(i, j) + a_space.d(i, l) - a_space.d(j, l));
                    }
                }
            }
        }
        let Some(bound) = bound else { continue };
        let frac = q(rng.gen_range(1..=3), 3);
        let eps = bound / (k + q(1, 1)) * frac;
        let a_points = a_space.points().to_vec();

        let b_space = (0..40).find_map(|_| {
            let steps = [q(-1, 1), q(-1, 2), q(0, 1), q(1, 2), q(1, 1)];
            RationalMetricSpace::from_fn(names("b", n), |i, j| {
                if j < shared {
                    a_space.d(i, j).clone()
                } else {
                    a_space.d(i, j) + &eps * steps.choose(rng).expect("non-empty")
                }
            })
            .ok()
        });
        let Some(b_space) = b_space else { continue };
        let ok = check_amalgamation_hypotheses(&a_space, &a_points, &b_space, shared, &eps)
            .map(|f| f.is_empty())
            .unwrap_or(false);
        if ok {
            return AmalgamationInstance { a_space, a_points, b_space, shared, eps };
        }
    }
}

/// Unary `P` with modulus 1, binary `E` with modulus 1/2 and unary `W`
/// with modulus 2.
pub fn test_signature() -> Signature {
    Signature::new()
        .with_relation_modulus("P", 1, one())
        .and_then(|s| s.with_relation_modulus("E", 2, q(1, 2)))
        .and_then(|s| s.with_relation_modulus("W", 1, q(2, 1)))
        .expect("fixed signature")
}

/// A random structure on `n` points over a constant-free signature. Each
/// table is a capped minimum of cones `a + L·d(t̄, c̄)` with `L` at most the
/// declared modulus (optionally complemented), so every modulus holds.
/// `(offset, slope, centre)` of `a + L·d(t̄, c̄)`.
type Cone = (Rational, Rational, Vec<usize>);

pub fn random_structure<R: Rng>(rng: &mut R, sig: &Signature, n: usize) -> FiniteStructure {
    let space = random_space(rng, "p", n);
    let mut cones: BTreeMap<String, (bool, Vec<Cone>)> = BTreeMap::new();
    for r in sig.relations() {
        let count = rng.gen_range(1..=3);
        let list = (0..count)
            .map(|_| {
                let a = q(rng.gen_range(0..=8), 8);
                let l = &r.modulus * q(rng.gen_range(0..=4), 4);
                let c = (0..r.arity).map(|_| rng.gen_range(0..n)).collect();
                (a, l, c)
            })
            .collect();
        cones.insert(r.name.clone(), (rng.gen_bool(0.5), list));
    }
    FiniteStructure::from_fn(space.clone(), sig.clone(), BTreeMap::new(), |name, t| {
        let (flip, list) = &cones[name];
        let v = list
            .iter()
            .map(|(a, l, c)| {
                let d = t.iter().zip(c).map(|(&x, &y)| space.d(x, y).clone()).max().unwrap_or_else(zero);
                plus(a, &(l * d))
            })
            .min()
            .expect("at least one cone");
        if *flip {
            complement(&v)
        } else {
            v
        }
    })
    .expect("cones respect the moduli")
}

fn random_term<R: Rng>(rng: &mut R, vars: &[String], consts: &[String]) -> Term {
    if !consts.is_empty() && (vars.is_empty() || rng.gen_bool(0.3)) {
        cst(consts.choose(rng).expect("non-empty"))
    } else {
        var(vars.choose(rng).expect("some variable in scope"))
    }
}

fn random_scale<R: Rng>(rng: &mut R) -> Rational {
    [q(1, 2), q(2, 1), q(3, 4), q(3, 2), q(1, 1)].choose(rng).expect("non-empty").clone()
}

/// A random formula of depth at most `depth` whose free variables lie in
/// `free` and whose quantifiers bind names from `bound_pool`.
pub fn random_formula<R: Rng>(
    rng: &mut R,
    sig: &Signature,
    free: &[String],
    bound_pool: &[String],
    depth: usize,
) -> Formula {
    let mut scope: Vec<String> = free.to_vec();
    formula_in(rng, sig, &mut scope, bound_pool, depth)
}

fn formula_in<R: Rng>(rng: &mut R, sig: &Signature, scope: &mut Vec<String>, pool: &[String], depth: usize) -> Formula {
    let consts = sig.constants().to_vec();
    let leaf = |rng: &mut R, scope: &Vec<String>| -> Formula {
        if scope.is_empty() && consts.is_empty() || rng.gen_ratio(1, 6) {
            return konst(q(rng.gen_range(0..=4), 4));
        }
        let rels = sig.relations();
        if !rels.is_empty() && rng.gen_bool(0.5) {
            let r = rels.choose(rng).expect("non-empty");
            rel(&r.name, (0..r.arity).map(|_| random_term(rng, scope, &consts)).collect())
        } else {
            dist(random_term(rng, scope, &consts), random_term(rng, scope, &consts))
        }
    };
    if depth == 0 || rng.gen_ratio(1, 4) {
        return leaf(rng, scope);
    }
    let d = depth - 1;
    match rng.gen_range(0..11) {
        0 => neg(formula_in(rng, sig, scope, pool, d)),
        1 => half(formula_in(rng, sig, scope, pool, d)),
        2 => scale(random_scale(rng), formula_in(rng, sig, scope, pool, d)),
        3 => min(formula_in(rng, sig, scope, pool, d), formula_in(rng, sig, scope, pool, d)),
        4 => max(formula_in(rng, sig, scope, pool, d), formula_in(rng, sig, scope, pool, d)),
        5 => dot_minus(formula_in(rng, sig, scope, pool, d), formula_in(rng, sig, scope, pool, d)),
        6 => dot_plus(formula_in(rng, sig, scope, pool, d), formula_in(rng, sig, scope, pool, d)),
        7 => abs_diff(formula_in(rng, sig, scope, pool, d), formula_in(rng, sig, scope, pool, d)),
        k if !pool.is_empty() => {
            let x = pool.choose(rng).expect("non-empty").clone();
            scope.push(x.clone());
            let body = formula_in(rng, sig, scope, pool, d);
            scope.pop();
            if k % 2 == 0 {
                sup(&x, body)
            } else {
                inf(&x, body)
            }
        }
        _ => leaf(rng, scope),
    }
}

/// A random quantifier-free sentence over the points of `fragment`, which
/// appear as constants.
pub fn random_qf_sentence<R: Rng>(rng: &mut R, fragment: &RationalMetricSpace, depth: usize) -> Formula {
    let mut sig = Signature::new();
    for p in fragment.points() {
        sig = sig.with_constant(p).expect("fresh names");
    }
    random_formula(rng, &sig, &[], &[], depth)
}
