use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel).display().to_string()
}

fn katetov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_katetov")).args(args).env_remove("KATETOV_CATALOG").output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = katetov(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn frac(v: &Value) -> (i128, i128) {
    let (n, d) = v.as_str().unwrap().split_once('/').unwrap();
    (n.parse().unwrap(), d.parse().unwrap())
}

#[test]
fn theta_demo_brackets_the_square_root() {
    let r = json(&["theta-demo", "--q", "1/4", "--tol", "1/1000000"]);
    assert_eq!(r["exact"], false);
    let e = &r["result"]["enclosure"];
    let ((ln, ld), (hn, hd), (wn, wd)) = (frac(&e["lo"]), frac(&e["hi"]), frac(&e["width"]));
    // lo <= 1/2 <= hi and width <= 1e-6, all in integers.
    assert!(2 * ln <= ld && hd <= 2 * hn);
    assert!(wn * 1_000_000 <= wd);
}

#[test]
fn vaught_sets_on_the_swap_space() {
    let r = json(&["vaught-sets", &data("swap.gspace"), "--set", "A", "--group-set", "G"]);
    assert_eq!(r["result"]["delta"], serde_json::json!(["x", "y"]));
    assert_eq!(r["result"]["star"], serde_json::json!([]));
}

#[test]
fn exit_codes() {
    assert_eq!(katetov(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(katetov(&["theta-demo"]).status.code(), Some(2));
    assert_eq!(katetov(&["--help"]).status.code(), Some(0));
    assert_eq!(katetov(&["validate", "/nonexistent/file.space"]).status.code(), Some(1));
    // A parse error in the formula is a domain error.
    assert_eq!(katetov(&["eval", &data("examples/path3.structure"), "(sup x (Q x))"]).status.code(), Some(1));
    // `@name` without a catalog is a usage error.
    assert_eq!(katetov(&["validate", "@sq"]).status.code(), Some(2));
}

#[test]
fn validate_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.space");
    std::fs::write(&bad, "points: a b c\nd a b 1/4\nd b c 1/4\nd a c 1\n").unwrap();
    let r = json(&["validate", bad.to_str().unwrap()]);
    assert_eq!(r["result"]["ok"], false);
    assert!(!r["result"]["violations"].as_array().unwrap().is_empty());
    let r = json(&["validate", &data("corpus/square.space")]);
    assert_eq!(r["result"]["ok"], true);
}

#[test]
fn catalog_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().to_str().unwrap();
    let square = data("corpus/square.space");
    assert!(katetov(&["--catalog", cat, "catalog", "put", "sq", &square]).status.success());
    let again = katetov(&["--catalog", cat, "catalog", "put", "sq", &square]);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("already"));
    assert_eq!(katetov(&["--catalog", cat, "catalog", "get", "nope"]).status.code(), Some(1));

    let got = katetov(&["--catalog", cat, "catalog", "get", "sq"]);
    assert!(got.status.success());
    let stored = dir.path().join("copy.space");
    std::fs::write(&stored, &got.stdout).unwrap();
    // Canonical text is a fixed point of put/get.
    assert!(katetov(&["--catalog", cat, "catalog", "put", "sq2", stored.to_str().unwrap()]).status.success());
    let got2 = katetov(&["--catalog", cat, "catalog", "get", "sq2"]);
    assert_eq!(got.stdout, got2.stdout);

    // `@name` inputs read the same content as the file.
    let via_file = json(&["validate", &square]);
    let via_cat = json(&["--catalog", cat, "validate", "@sq"]);
    assert_eq!(via_file["result"], via_cat["result"]);
}

#[test]
fn catalog_enumeration_is_the_default() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().to_str().unwrap();
    let m = data("examples/path3.structure");
    let e = dir.path().join("rev.enumeration");
    std::fs::write(&e, "tuple P c\ntuple P b\ntuple P a\n").unwrap();
    assert!(katetov(&["--catalog", cat, "catalog", "put", "m", &m]).status.success());
    assert!(katetov(&["--catalog", cat, "catalog", "put", "e", e.to_str().unwrap(), "--against", "m"])
        .status
        .success());
    let list = json(&["--catalog", cat, "catalog", "list"]);
    assert_eq!(list["result"]["enumeration"], "e");
    // n differs from m only at c, which the stored enumeration lists first.
    let n = dir.path().join("n.structure");
    std::fs::write(&n, std::fs::read_to_string(&m).unwrap().replace("v c 1/1", "v c 0/1")).unwrap();
    let n = n.to_str().unwrap();
    let with_default = json(&["--catalog", cat, "delta-seq", "@m", n, "--k", "1"]);
    let explicit = json(&["--catalog", cat, "delta-seq", "@m", n, "--k", "1", "--enum", "@e"]);
    let plain = json(&["delta-seq", &m, n, "--k", "1"]);
    assert_eq!(with_default["result"], explicit["result"]);
    assert_ne!(with_default["result"]["enclosure"]["lo"], plain["result"]["enclosure"]["lo"]);
}

#[test]
fn reports_are_deterministic() {
    let args = ["eval-urysohn", &data("examples/anchors.anchored"), "(inf x (R x))", "--rounds", "2"];
    let (mut a, mut b) = (json(&args), json(&args));
    for r in [&mut a, &mut b] {
        r.as_object_mut().unwrap().remove("timing_us");
    }
    assert_eq!(a, b);
    assert_eq!(a["command"], args.join(" "));
    assert_eq!(a["inputs_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn json_and_text_agree() {
    let args = ["eval", &data("examples/path3.structure"), "(sup x (P x))"];
    let r = json(&args);
    assert_eq!(r["result"]["value"], "1/1");
    let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["command", "inputs_digest", "exact", "result", "timing_us"]);
    let text = String::from_utf8(katetov(&args).stdout).unwrap();
    assert!(text.starts_with(&format!(
        "command: {}\ninputs-digest: {}\n",
        args.join(" "),
        r["inputs_digest"].as_str().unwrap()
    )));
    assert!(text.contains("  value: 1/1\n"));
}

#[test]
fn orbit_equivalence_matches_isomorphism() {
    let r = json(&["orbit-equiv", &data("examples/swap.instance"), "--x", "u", "--x2", "v"]);
    assert_eq!(r["result"]["same_orbit"], true);
    assert_eq!(r["result"]["isomorphic"], true);
}

#[test]
fn lemma_suite_passes() {
    let r = json(&["lemma-suite", "--seed", "7", "--count", "10"]);
    assert_eq!(r["result"]["passed"], true);
}
