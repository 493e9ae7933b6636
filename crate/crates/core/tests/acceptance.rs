//! End-to-end acceptance run: one line per criterion, non-zero exit on any
//! failure. Every check is exact unless a tolerance is stated.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use katetov_core::finite::{eval, Assignment, FiniteStructure};
use katetov_core::formula::{borel_level, lipschitz, parse, BorelLevel, ClassKind, Comparison, Formula, Signature};
use katetov_core::gen::{
    random_amalgamation, random_formula, random_qf_sentence, random_space, random_structure, test_signature,
};
use katetov_core::graded::{
    check_graded_axioms, isometry_group, rho_s, GradedDescriptor, GradedKind, GroupMetricContext, PartialIsometry,
};
use katetov_core::metric::{amalgamate, displacement_factor, qu_enumerate, validate_metric, RationalMetricSpace};
use katetov_core::rational::{one, q, Rational};
use katetov_core::reduction::{check_invariance, orbit_equiv_all, random_instance};
use katetov_core::text::parse_space;
use katetov_core::urysohn::{eval_urysohn, qf_decide, theta_demo, AnchoredStructure, QuantifierBudget};
use katetov_core::vaught::lemma_suite;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: &[String], detail: String) -> Outcome {
    match failures.first() {
        None => Outcome { pass: true, detail },
        Some(first) => {
            Outcome { pass: false, detail: format!("{detail}; {} failure(s), first: {first}", failures.len()) }
        }
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    out.detail = format!("{} [{:.2?}]", out.detail, took);
    if let Some(limit) = limit {
        if took >= limit {
            out.pass = false;
            out.detail = format!("{} exceeds {:?}", out.detail, limit);
        }
    }
    out
}

/// Independent triangle and symmetry oracle over a full distance table.
fn brute_force_metric(s: &RationalMetricSpace) -> bool {
    let n = s.len();
    (0..n).all(|i| {
        *s.d(i, i) == Rational::from_integer(0.into())
            && (0..n).all(|j| {
                s.d(i, j) == s.d(j, i)
                    && *s.d(i, j) <= one()
                    && (i == j || *s.d(i, j) > Rational::from_integer(0.into()))
                    && (0..n).all(|k| *s.d(i, k) <= s.d(i, j) + s.d(j, k))
            })
    })
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    let mut count = 0;
    let mut fallback = 0;
    for n in 2..=6usize {
        for shared in 0..=2.min(n - 1) {
            for _ in 0..16 {
                let inst = random_amalgamation(&mut rng, n, shared);
                count += 1;
                let out = match amalgamate(&inst.a_space, &inst.a_points, &inst.b_space, shared, &inst.eps) {
                    Ok(out) => out,
                    Err(e) => {
                        failures.push(format!("n={n} q={shared}: {e}"));
                        continue;
                    }
                };
                if !matches!(out.method, katetov_core::metric::AmalgamationMethod::Inductive) {
                    fallback += 1;
                }
                let s = &out.space;
                if !validate_metric(s.points(), s.dist_table()).is_ok() || !brute_force_metric(s) {
                    failures.push(format!("n={n} q={shared}: not a metric"));
                }
                let k = displacement_factor(n, shared) * &inst.eps;
                let b_index = |i: usize| if i < shared { i } else { n + i - shared };
                for i in shared..n {
                    if *s.d(i, b_index(i)) != k {
                        failures.push(format!("n={n} q={shared}: d(a{i},b{i}) = {} != {k}", s.d(i, b_index(i))));
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        if s.d(b_index(i), b_index(j)) != inst.b_space.d(i, j) {
                            failures.push(format!("n={n} q={shared}: B distance ({i},{j}) moved"));
                        }
                    }
                }
                if !out.witness.verify() {
                    failures.push(format!("n={n} q={shared}: witness rejected"));
                }
            }
        }
    }
    outcome(&failures, format!("{count} instances ({fallback} via shortest paths)"))
}

fn criterion_2() -> Outcome {
    let tol = q(1, 1_000_000);
    let mut failures = Vec::new();
    let mut widest = Rational::from_integer(0.into());
    for k in 11..=49 {
        let qv = q(k, 100);
        match theta_demo(&qv, &tol) {
            Ok(r) => {
                let e = &r.enclosure;
                widest = widest.max(e.width());
                if e.width() > tol {
                    failures.push(format!("q={qv}: width {}", e.width()));
                }
                // lo <= sqrt(q) <= hi, compared through squares.
                if e.lo() * e.lo() > qv || e.hi() * e.hi() < qv {
                    failures.push(format!("q={qv}: [{}, {}] misses sqrt(q)", e.lo(), e.hi()));
                }
            }
            Err(e) => failures.push(format!("q={qv}: {e}")),
        }
    }
    for (qv, root) in [(q(1, 4), q(1, 2)), (q(49, 100), q(7, 10))] {
        match theta_demo(&qv, &tol) {
            Ok(r) if r.enclosure.contains(&root) => {}
            Ok(r) => failures.push(format!("q={qv}: {:?} misses {root}", r.enclosure)),
            Err(e) => failures.push(format!("q={qv}: {e}")),
        }
    }
    outcome(&failures, format!("39 values, widest enclosure {:.3e}", to_f64(&widest)))
}

fn to_f64(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn criteria_3_4() -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let report = lemma_suite(&mut rng, 60);
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for l in report.lemmas.iter().filter(|l| l.name != "closed-form") {
        counts.push(format!("{}={}", l.name, l.checks));
        if l.checks == 0 {
            failures.push(format!("{}: nothing checked", l.name));
        }
        failures.extend(l.violations.iter().map(|v| format!("{}: {v}", l.name)));
    }
    let three = outcome(&failures, format!("{} G-spaces; checks {}", report.instances, counts.join(" ")));
    let four = match report.lemma("closed-form") {
        Some(l) if l.checks > 0 => outcome(&l.violations, format!("{} scan/closed-form comparisons", l.checks)),
        _ => Outcome { pass: false, detail: "closed-form lemma missing".into() },
    };
    (three, four)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sig = test_signature();
    let free = vec!["x".to_string(), "y".to_string()];
    let pool = vec!["x".to_string(), "y".to_string(), "z".to_string()];
    let formulas: Vec<(Formula, Rational)> = (0..200)
        .map(|_| {
            let phi = random_formula(&mut rng, &sig, &free, &pool, 4);
            let l = lipschitz(&phi, &sig).expect("generated over the signature");
            (phi, l)
        })
        .collect();
    let structures: Vec<FiniteStructure> = (0..40)
        .map(|_| {
            let n = rng.gen_range(1..=6);
            random_structure(&mut rng, &sig, n)
        })
        .collect();
    let mut failures = Vec::new();
    let mut pairs = 0;
    let mut tight = 0;
    while pairs < 10_000 {
        let (phi, l) = &formulas[rng.gen_range(0..formulas.len())];
        let m = &structures[rng.gen_range(0..structures.len())];
        let n = m.space().len();
        let a: Assignment = free.iter().map(|v| (v.clone(), rng.gen_range(0..n))).collect();
        let b: Assignment = free.iter().map(|v| (v.clone(), rng.gen_range(0..n))).collect();
        let disp = free.iter().map(|v| m.space().d(a[v], b[v]).clone()).max().expect("two variables");
        let (va, vb) = (eval(phi, m, &a).expect("evaluates"), eval(phi, m, &b).expect("evaluates"));
        let gap = if va > vb { &va - &vb } else { &vb - &va };
        let bound = l * &disp;
        pairs += 1;
        if gap == bound && gap > Rational::from_integer(0.into()) {
            tight += 1;
        }
        if gap > bound {
            failures.push(format!("{phi}: |{va} - {vb}| > {l}·{disp}"));
        }
    }
    outcome(&failures, format!("{pairs} pairs over 200 formulas, {tight} with equality"))
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let milli = q(1, 1000);
    let none = BTreeMap::new();

    let s = AnchoredStructure::pure(RationalMetricSpace::singleton("s")).expect("one anchor");
    let sup = parse("(sup x (d s x))", s.sig()).expect("parses");
    match eval_urysohn(&sup, &s, &none, &QuantifierBudget::new(q(1, 10), 3)) {
        Ok(r) if r.enclosure.contains(&one()) && r.enclosure.width() <= milli => {}
        Ok(r) => failures.push(format!("sup_x d(s,x): {:?}", r.enclosure)),
        Err(e) => failures.push(format!("sup_x d(s,x): {e}")),
    }

    let ab = katetov_core::metric::space_from_pairs(&["a", "b"], &[("a", "b", q(3, 5))]).expect("metric");
    let ab = AnchoredStructure::pure(ab).expect("anchors");
    let inf = parse("(inf x (max (d a x) (d b x)))", ab.sig()).expect("parses");
    match eval_urysohn(&inf, &ab, &none, &QuantifierBudget::new(q(1, 10), 7)) {
        Ok(r) if r.enclosure.contains(&q(3, 10)) && r.enclosure.width() <= milli => {}
        Ok(r) => failures.push(format!("inf_x max: {:?}", r.enclosure)),
        Err(e) => failures.push(format!("inf_x max: {e}")),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pool = vec!["x".to_string(), "y".to_string()];
    let mut formulas = 0;
    let mut passes = 0;
    while formulas < 20 {
        let n = rng.gen_range(1..=2);
        let st = AnchoredStructure::pure(random_space(&mut rng, "c", n)).expect("anchors");
        let phi = random_formula(&mut rng, st.sig(), &[], &pool, 3);
        if phi.quantifier_depth() == 0 || phi.quantifier_depth() > 2 {
            continue;
        }
        formulas += 1;
        let r = match eval_urysohn(&phi, &st, &none, &QuantifierBudget::new(q(1, 4), 2)) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{phi}: {e}"));
                continue;
            }
        };
        passes += r.raw.len();
        for w in r.passes.windows(2) {
            if !w[1].is_within(&w[0]) {
                failures.push(format!("{phi}: {:?} not within {:?}", w[1], w[0]));
            }
        }
        for (i, a) in r.raw.iter().enumerate() {
            for b in &r.raw[i + 1..] {
                if a.intersect(b).is_none() {
                    failures.push(format!("{phi}: passes {a:?} and {b:?} are disjoint"));
                }
            }
        }
    }
    outcome(&failures, format!("two reference values; {formulas} pool formulas, {passes} passes"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fragments: Vec<RationalMetricSpace> = (0..10)
        .map(|i| {
            let seed = random_space(&mut rng, "s", 1 + i % 2);
            qu_enumerate(&seed, 2 + (i % 2) as u32, 1).expect("fragment").space
        })
        .collect();
    let thresholds = [q(0, 1), q(1, 4), q(1, 2), q(3, 4), q(1, 1)];
    let mut failures = Vec::new();
    let mut largest = 0;
    for i in 0..100 {
        let frag = &fragments[i % fragments.len()];
        largest = largest.max(frag.len());
        let phi = random_qf_sentence(&mut rng, frag, 4);
        let decision = match qf_decide(&phi, frag, &thresholds) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("{phi}: {e}"));
                continue;
            }
        };
        // The fragment as a structure whose constants name its points.
        let mut sig = Signature::new();
        for p in frag.points() {
            sig = sig.with_constant(p).expect("fresh");
        }
        let consts = frag.points().iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let m = FiniteStructure::new(frag.clone(), sig, BTreeMap::new(), consts).expect("structure");
        let v = eval(&phi, &m, &Assignment::new()).expect("evaluates");
        if v != decision.value {
            failures.push(format!("{phi}: decided {} but evaluates to {v}", decision.value));
        }
        for t in &decision.thresholds {
            if t.less != (v < t.threshold) || t.greater != (v > t.threshold) {
                failures.push(format!("{phi}: threshold {} disagrees", t.threshold));
            }
        }
    }
    outcome(&failures, format!("100 sentences over {} fragments (up to {largest} points)", fragments.len()))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let (mut pairs, mut orbits, mut instances) = (0, 0, 0);
    for _ in 0..60 {
        let inst = random_instance(&mut rng, 5, 8);
        instances += 1;
        match orbit_equiv_all(&inst) {
            Ok(all) => {
                for (x, x2, e) in all {
                    pairs += 1;
                    orbits += e.same_orbit as usize;
                    if e.same_orbit != e.isomorphic {
                        failures.push(format!("x{x}, x{x2}: same_orbit={} isomorphic={}", e.same_orbit, e.isomorphic));
                    }
                }
            }
            Err(e) => failures.push(e.to_string()),
        }
        for x in 0..inst.x().len() {
            match check_invariance(&inst, x, inst.y().len()) {
                Ok(bad) if bad.is_empty() => {}
                Ok(bad) => failures.push(format!("x{x}: M(gx) != g M(x) for {}", bad.join(","))),
                Err(e) => failures.push(e.to_string()),
            }
        }
    }
    outcome(&failures, format!("{instances} instances, {pairs} ordered pairs, {orbits} in the same orbit"))
}

fn criterion_9() -> Outcome {
    let sig = Signature::new().with_relation("R", 1).expect("signature");
    use Comparison::{GreaterThan as Gt, LessThan as Lt};
    // Derived by hand: atomic `<` is open, `>` is one class up; negation
    // flips the comparison; `inf`/`<` and `sup`/`>` are countable unions;
    // `sup`/`<` and `inf`/`>` climb one class.
    let table: [(&str, Comparison, usize); 10] = [
        ("(d x y)", Lt, 1),
        ("(R x)", Gt, 2),
        ("(neg (d x y))", Lt, 2),
        ("(inf x (R x))", Lt, 1),
        ("(sup x (R x))", Lt, 2),
        ("(sup x (R x))", Gt, 2),
        ("(dotminus 1 (d x y))", Lt, 2),
        ("(max (R x) (inf y (d x y)))", Lt, 1),
        ("(inf x (sup y (d x y)))", Lt, 2),
        ("(neg (inf x (R x)))", Lt, 3),
    ];
    let mut failures = Vec::new();
    for (text, cmp, index) in table {
        let phi = match parse(text, &sig) {
            Ok(p) => p,
            Err(e) => {
                failures.push(format!("{text}: {e}"));
                continue;
            }
        };
        let want = BorelLevel { kind: ClassKind::Sigma, index };
        let got = borel_level(&phi, cmp);
        if got != want {
            failures.push(format!("{text} {cmp:?}: got {got}, expected {want}"));
        }
    }
    outcome(&failures, "10 formulas".into())
}

fn corpus() -> Vec<(String, RationalMetricSpace)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "space"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).expect("readable");
            let name = p.file_stem().expect("stem").to_string_lossy().into_owned();
            let space = parse_space(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, space)
        })
        .collect()
}

fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let (mut spaces, mut checks, mut rho_checks) = (0, 0usize, 0usize);
    for (name, space) in corpus().into_iter().filter(|(_, s)| s.len() <= 6) {
        spaces += 1;
        let group = isometry_group(&space);
        let pairs: Vec<(PartialIsometry, PartialIsometry)> =
            group.iter().flat_map(|g| group.iter().map(move |h| (g.clone(), h.clone()))).collect();
        let pts: Vec<&str> = space.points().iter().map(String::as_str).collect();
        let mut bases: Vec<Vec<&str>> = pts.iter().map(|p| vec![*p]).collect();
        for (i, a) in pts.iter().enumerate() {
            bases.extend(pts[i + 1..].iter().map(|b| vec![*a, *b]));
        }
        bases.push(pts.clone());
        for kind in [GradedKind::Linear, GradedKind::Sqrt] {
            for scale in [q(1, 2), q(1, 1), q(3, 1)] {
                for base in &bases {
                    let desc = GradedDescriptor::subgroup(kind, scale.clone(), base);
                    match check_graded_axioms(&desc, &space, &pairs) {
                        Ok(r) => {
                            checks += r.checked;
                            failures.extend(r.failures.iter().map(|f| format!("{name} {desc}: {f:?}")));
                        }
                        Err(e) => failures.push(format!("{name} {desc}: {e}")),
                    }
                }
            }
        }
        // rho_S(f∘g, f∘h) = rho_S(g, h) for all f, g, h, through a table of
        // rho_S over G×G and the composition table of G.
        let index: BTreeMap<&PartialIsometry, usize> = group.iter().enumerate().map(|(i, g)| (g, i)).collect();
        let comp: Vec<Vec<usize>> =
            group.iter().map(|f| group.iter().map(|g| index[&f.compose(g)]).collect()).collect();
        let forward = GroupMetricContext::all(&space);
        let backward = GroupMetricContext::new(&space, (0..space.len()).rev().collect()).expect("injective");
        for ctx in [forward, backward] {
            for k in 0..=space.len() {
                let table: Vec<Vec<_>> = group
                    .iter()
                    .map(|g| group.iter().map(|h| rho_s(g, h, &ctx, &space, k).expect("total maps")).collect())
                    .collect();
                for row in &comp {
                    for (g, &fg) in row.iter().enumerate() {
                        for (h, &fh) in row.iter().enumerate() {
                            rho_checks += 1;
                            if table[fg][fh] != table[g][h] {
                                failures.push(format!("{name}: rho_S not left-invariant at k={k}"));
                            }
                        }
                    }
                }
            }
        }
    }
    outcome(&failures, format!("{spaces} spaces, {checks} axiom checks, {rho_checks} invariance checks"))
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    results.push((1, timed(Some(Duration::from_secs(30)), criterion_1)));
    results.push((2, timed(Some(Duration::from_secs(10)), criterion_2)));
    let (three, four) = criteria_3_4();
    results.push((3, three));
    results.push((4, four));
    results.push((5, timed(None, criterion_5)));
    results.push((6, timed(None, criterion_6)));
    results.push((7, timed(None, criterion_7)));
    results.push((8, timed(None, criterion_8)));
    results.push((9, timed(None, criterion_9)));
    results.push((10, timed(None, criterion_10)));
    let mut ok = true;
    for (n, o) in &results {
        println!("criterion {n}: {} — {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        ok &= o.pass;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
