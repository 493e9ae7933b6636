//! Property tests. Random inputs come from the seeded generators in
//! `katetov_core::gen`, driven by proptest-chosen seeds.

use std::collections::{BTreeMap, BTreeSet};

use katetov_core::finite::{default_enumeration, delta_seq, eval, mod_member, Assignment, FiniteStructure};
use katetov_core::formula::{borel_level, build, lipschitz, parse, Comparison, Signature};
use katetov_core::gen::{random_formula, random_space, random_structure, test_signature};
use katetov_core::graded::{
    check_formula_invariance, check_graded_axioms, isometry_group, rho_s, GradedDescriptor, GradedKind,
    GroupMetricContext, InvarianceMode, PartialIsometry,
};
use katetov_core::metric::{one_point_extend, qu_enumerate, validate_metric, KatetovFunction};
use katetov_core::rational::{one, q, Rational};
use katetov_core::reduction::{encode, random_instance};
use katetov_core::text::{
    parse_gspace, parse_instance, parse_space, parse_structure, write_gspace, write_instance, write_space,
    write_structure, GSpaceDoc,
};
use katetov_core::urysohn::{eval_urysohn, AnchoredStructure, QuantifierBudget};
use katetov_core::vaught::{random_suite_instance, vaught_delta, vaught_star};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn all_assignments(vars: &[String], n: usize) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|a| {
                (0..n).map(move |p| {
                    let mut b = a.clone();
                    b.insert(v.clone(), p);
                    b
                })
            })
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_print_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = test_signature();
        let phi = random_formula(&mut r, &sig, &names(&["x", "y"]), &names(&["x", "z"]), 5);
        prop_assert_eq!(parse(&phi.to_string(), &sig).unwrap(), phi);
    }

    #[test]
    fn negation_swaps_comparison(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = test_signature();
        let phi = random_formula(&mut r, &sig, &names(&["x"]), &names(&["y", "z"]), 5);
        for cmp in [Comparison::LessThan, Comparison::GreaterThan] {
            prop_assert_eq!(borel_level(&build::neg(phi.clone()), cmp.dual()), borel_level(&phi, cmp));
            prop_assert!(borel_level(&phi, cmp).index >= 1);
        }
    }

    #[test]
    fn lattice_connectives_are_pointwise(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = test_signature();
        let free = names(&["x"]);
        let (a, b) = (random_formula(&mut r, &sig, &free, &free, 3), random_formula(&mut r, &sig, &free, &free, 3));
        let n = r.gen_range(1..=5);
        let m = random_structure(&mut r, &sig, n);
        for asg in all_assignments(&free, n) {
            let (va, vb) = (eval(&a, &m, &asg).unwrap(), eval(&b, &m, &asg).unwrap());
            prop_assert_eq!(eval(&build::min(a.clone(), b.clone()), &m, &asg).unwrap(), va.clone().min(vb.clone()));
            prop_assert_eq!(eval(&build::max(a.clone(), b.clone()), &m, &asg).unwrap(), va.max(vb));
        }
    }

    #[test]
    fn mod_member_sides_are_exclusive(seed in any::<u64>(), k in 0i64..=8) {
        let mut r = rng(seed);
        let sig = test_signature();
        let free = names(&["x"]);
        let phi = random_formula(&mut r, &sig, &free, &names(&["y"]), 4);
        let m = random_structure(&mut r, &sig, 4);
        let eps = q(k, 8);
        for asg in all_assignments(&free, 4) {
            let lt = mod_member(&m, &phi, &asg, &eps, Comparison::LessThan).unwrap();
            let gt = mod_member(&m, &phi, &asg, &eps, Comparison::GreaterThan).unwrap();
            prop_assert!(!(lt && gt));
        }
    }

    /// A unary table breaks its modulus exactly when the atom breaks the
    /// Lipschitz bound on some pair of points.
    #[test]
    fn modulus_compliance_matches_atom_soundness(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=5);
        let space = random_space(&mut r, "p", n);
        let modulus = q(r.gen_range(1..=4), 2);
        let sig = Signature::new().with_relation_modulus("P", 1, modulus).unwrap();
        let table: Vec<Rational> = (0..n).map(|_| q(r.gen_range(0..=8), 8)).collect();
        let m = FiniteStructure::new_unchecked_modulus(
            space.clone(), sig.clone(), BTreeMap::from([("P".to_string(), table)]), BTreeMap::new(),
        ).unwrap();
        let atom = parse("(P x)", &sig).unwrap();
        let l = lipschitz(&atom, &sig).unwrap();
        let mut broken = false;
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (m.rel("P", &[i]).unwrap(), m.rel("P", &[j]).unwrap());
                let gap = if a > b { a - b } else { b - a };
                broken |= gap > &l * space.d(i, j);
            }
        }
        prop_assert_eq!(broken, !m.modulus_violations().is_empty());
    }

    #[test]
    fn delta_seq_is_a_pseudometric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = test_signature();
        let n = r.gen_range(2..=4);
        let m = random_structure(&mut r, &sig, n);
        let perm = |r: &mut ChaCha8Rng| { let mut p: Vec<usize> = (0..n).collect(); p.shuffle(r); p };
        let (a, b) = (m.transport(&perm(&mut r)), m.transport(&perm(&mut r)));
        let e = default_enumeration(&sig, n);
        for k in 0..=e.len() {
            let ab = delta_seq(&a, &b, &e, k).unwrap();
            prop_assert_eq!(&ab, &delta_seq(&b, &a, &e, k).unwrap());
            let (am, mb) = (delta_seq(&a, &m, &e, k).unwrap(), delta_seq(&m, &b, &e, k).unwrap());
            prop_assert!(ab.lo() <= &(am.lo() + mb.lo()));
        }
    }

    #[test]
    fn extension_accepts_exactly_admissible_functions(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=4);
        let space = random_space(&mut r, "p", n);
        let f = KatetovFunction::new((0..n).map(|_| q(r.gen_range(0..=8), 8)).collect());
        match one_point_extend(&space, &f, "new") {
            Ok(ext) => {
                prop_assert!(f.check_admissible(&space).is_ok());
                prop_assert!(validate_metric(ext.points(), ext.dist_table()).is_ok());
            }
            Err(_) => prop_assert!(f.check_admissible(&space).is_err()),
        }
    }

    #[test]
    fn qu_enumeration_grows_with_budget(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=3);
        let s = random_space(&mut r, "s", n);
        let small = qu_enumerate(&s, 2, 1).unwrap().space;
        let large = qu_enumerate(&s, 2, 2).unwrap().space;
        prop_assert!(small.is_subspace_of(&large));
        prop_assert!(validate_metric(large.points(), large.dist_table()).is_ok());
    }

    #[test]
    fn rho_s_is_left_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=5);
        let space = random_space(&mut r, "p", n);
        let group = isometry_group(&space);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let ctx = GroupMetricContext::new(&space, order).unwrap();
        for f in &group {
            for g in &group {
                for h in &group {
                    for k in 0..=n {
                        prop_assert_eq!(
                            rho_s(&f.compose(g), &f.compose(h), &ctx, &space, k).unwrap(),
                            rho_s(g, h, &ctx, &space, k).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn graded_subgroups_are_subadditive(seed in any::<u64>(), sqrt in any::<bool>(), scale in 1i64..=12) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6);
        let space = random_space(&mut r, "p", n);
        let group = isometry_group(&space);
        let pairs: Vec<(PartialIsometry, PartialIsometry)> =
            group.iter().flat_map(|g| group.iter().map(move |h| (g.clone(), h.clone()))).collect();
        let size = r.gen_range(1..=n);
        let base: Vec<&str> = space.points().choose_multiple(&mut r, size).map(String::as_str).collect();
        let kind = if sqrt { GradedKind::Sqrt } else { GradedKind::Linear };
        let desc = GradedDescriptor::subgroup(kind, q(scale, 4), &base);
        let report = check_graded_axioms(&desc, &space, &pairs).unwrap();
        prop_assert!(report.passed(), "{:?}", report.failures);
    }

    #[test]
    fn vaught_duality(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_suite_instance(&mut r);
        let x = &inst.space;
        for phi in &inst.phis {
            for j in inst.js.iter().chain([&inst.subgroup]) {
                let star = vaught_star(x, phi, j).unwrap();
                let flipped = vaught_delta(x, &phi.map(|v| one() - v), j).unwrap();
                prop_assert_eq!(star, flipped.map(|v| one() - v));
            }
        }
    }

    #[test]
    fn text_formats_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=5);
        let s = random_space(&mut r, "p", n);
        prop_assert_eq!(parse_space(&write_space(&s)).unwrap(), s);

        let m = random_structure(&mut r, &test_signature(), n);
        prop_assert_eq!(parse_structure(&write_structure(&m)).unwrap(), m);

        let inst = random_instance(&mut r, 4, 6);
        prop_assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);

        let g = random_suite_instance(&mut r);
        let mut space = g.space.clone();
        space.add_space_table("phi", g.phis[0].clone()).unwrap();
        space.add_group_table("H", g.subgroup.clone()).unwrap();
        let doc = GSpaceDoc {
            subsets: BTreeMap::from([("A".to_string(), BTreeSet::from([0]))]),
            group_subsets: BTreeMap::from([("U".to_string(), BTreeSet::from([0]))]),
            space,
        };
        prop_assert_eq!(parse_gspace(&write_gspace(&doc)).unwrap(), doc);
    }

    /// `|φ^{g(M)}(c) − φ^M(c)| ≤ lipschitz(φ)·d(gc, c)` for every isometry, and
    /// no change at all under automorphisms.
    #[test]
    fn formulas_respect_isometries(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = test_signature();
        let n = r.gen_range(1..=5);
        let m = random_structure(&mut r, &sig, n);
        let phi = random_formula(&mut r, &sig, &names(&["x"]), &names(&["y", "z"]), 4);
        let isos: Vec<PartialIsometry> =
            m.space().isometries().iter().map(|p| PartialIsometry::from_perm(m.space(), p).unwrap()).collect();
        let autos: Vec<PartialIsometry> =
            m.automorphisms().iter().map(|p| PartialIsometry::from_perm(m.space(), p).unwrap()).collect();
        for c in 0..n {
            let params = Assignment::from([("x".to_string(), c)]);
            let iso = check_formula_invariance(&phi, &params, &m, &isos, InvarianceMode::Isometries).unwrap();
            prop_assert!(iso.failures.is_empty(), "{:?}", iso.failures);
            let auto = check_formula_invariance(&phi, &params, &m, &autos, InvarianceMode::Automorphisms).unwrap();
            prop_assert!(auto.failures.is_empty());
            prop_assert_eq!(auto.max_gap, q(0, 1));
        }
    }

    #[test]
    fn encode_separates_points(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = random_instance(&mut r, 4, 6);
        prop_assert!(inst.basis_separates());
        let k = inst.y().len();
        let codes: Vec<FiniteStructure> = (0..inst.x().len()).map(|x| encode(&inst, x, k).unwrap()).collect();
        for i in 0..codes.len() {
            for j in i + 1..codes.len() {
                prop_assert_ne!(&codes[i], &codes[j]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Finite sup/inf over points of an enumerated fragment stay inside the
    /// Urysohn enclosure on the matching side.
    #[test]
    fn urysohn_bounds_finite_fragments(seed in any::<u64>(), use_sup in any::<bool>()) {
        let mut r = rng(seed);
        let n = r.gen_range(1..=2);
        let anchors = random_space(&mut r, "a", n);
        let st = AnchoredStructure::pure(anchors.clone()).unwrap();
        let body = random_formula(&mut r, st.sig(), &names(&["x"]), &[], 3);
        let phi = if use_sup { build::sup("x", body) } else { build::inf("x", body) };
        let enclosure = eval_urysohn(&phi, &st, &BTreeMap::new(), &QuantifierBudget::new(q(1, 4), 1)).unwrap().enclosure;

        let fragment = qu_enumerate(&anchors, 2, 2).unwrap().space;
        let consts = anchors.points().iter().map(|p| (p.clone(), fragment.index_of(p).unwrap())).collect();
        let m = FiniteStructure::new(fragment, st.sig().clone(), BTreeMap::new(), consts).unwrap();
        let finite = eval(&phi, &m, &Assignment::new()).unwrap();
        if use_sup {
            prop_assert!(&finite <= enclosure.hi());
        } else {
            prop_assert!(&finite >= enclosure.lo());
        }
    }
}
