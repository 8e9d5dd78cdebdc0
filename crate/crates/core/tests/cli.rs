//! End-to-end tests of the `tate` binary: exit codes, output formats,
//! determinism across runs and relation permutations, and cache round
//! trips through the CLI.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name);
    root.to_str().unwrap().to_string()
}

fn tate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Structured output with the timestamp line removed.
fn stable(out: &Output) -> String {
    stdout(out)
        .lines()
        .filter(|l| !l.starts_with("meta timestamp="))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn closure_table_lists_the_tate_variables() {
    let out = tate(&["closure", &corpus("p2_hypersurface.json")]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("y1"), "{text}");
    assert!(text.contains("x*y1"), "{text}");
    assert!(text.contains("counts by degree 1..9: [1, 1, 0, 0, 0, 0, 0, 0, 0]"));
}

#[test]
fn check_all_passes_on_the_ci_document() {
    let out = tate(&["check", "all", &corpus("p3_ci.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("summary: PASS"));
}

#[test]
fn unknown_check_suite_is_a_usage_error() {
    let out = tate(&["check", "some", &corpus("p3_ci.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_document_exits_2_with_the_offending_index() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{
            "p": 2,
            "generators": [{"name": "x", "weight": 1}],
            "relations": [[{"c": 1, "e": [2]}], [{"c": 1, "e": [2]}, {"c": 1, "e": [1]}]],
            "kernel_generators": [],
            "window": {"n": 4, "d": 8}
        }"#,
    )
    .unwrap();
    let out = tate(&["closure", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("index 1"), "{err}");
}

#[test]
fn window_exhaustion_exits_3() {
    let out = tate(&["closure", &corpus("p2_hypersurface.json"), "--window", "8,3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn structured_output_is_deterministic_modulo_timestamp() {
    let doc = corpus("p2_exact_zero_divisor.json");
    let a = tate(&["check", "all", &doc, "--format", "structured"]);
    let b = tate(&["check", "all", &doc, "--format", "structured"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stable(&a), stable(&b));
    assert!(stdout(&a).starts_with("#tate v1\n"));
    // the timestamp line exists and is the only unstable line
    assert!(stdout(&a).lines().any(|l| l.starts_with("meta timestamp=")));
}

#[test]
fn relation_permutation_leaves_output_unchanged() {
    let doc = corpus("p2_golod.json");
    let base = tate(&["closure", &doc, "--format", "structured"]);
    for order in ["0,1,2", "2,0,1", "1,2,0"] {
        let permuted = tate(&[
            "closure",
            &doc,
            "--format",
            "structured",
            "--seed-order",
            order,
        ]);
        assert!(permuted.status.success());
        assert_eq!(stable(&base), stable(&permuted), "order {order}");
    }
    // a non-permutation is rejected up front
    let bad = tate(&["closure", &doc, "--seed-order", "0,0,1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn cache_roundtrip_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let cache: PathBuf = dir.path().join("closure.cache");
    let doc = corpus("p3_hypersurface.json");
    let first = tate(&[
        "closure",
        &doc,
        "--save-cache",
        cache.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(first.status.success());
    let bytes1 = std::fs::read(&cache).unwrap();
    let second = tate(&[
        "closure",
        &doc,
        "--load-cache",
        cache.to_str().unwrap(),
        "--save-cache",
        cache.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(second.status.success());
    let bytes2 = std::fs::read(&cache).unwrap();
    assert_eq!(bytes1, bytes2, "cache reload must reproduce the bytes");
    assert_eq!(stable(&first), stable(&second));
    // a cache from a different document is rejected
    let other = tate(&[
        "closure",
        &corpus("p2_hypersurface.json"),
        "--load-cache",
        cache.to_str().unwrap(),
    ]);
    assert_eq!(other.status.code(), Some(2));
}

#[test]
fn tampered_comparison_cache_fails_the_chain_check() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cmp.cache");
    let doc = corpus("p2_hypersurface.json");
    let save = tate(&["compare", &doc, "--save-cache", cache.to_str().unwrap()]);
    assert!(save.status.success());
    let text = std::fs::read_to_string(&cache).unwrap();
    // zero out the image of x1_y2
    let x1_id = text
        .lines()
        .find(|l| l.starts_with("var ") && l.contains(" x1_y2 "))
        .and_then(|l| l.split(' ').nth(1))
        .unwrap()
        .to_string();
    let tampered: String = text
        .lines()
        .map(|l| {
            if l.starts_with(&format!("asg {x1_id} ")) {
                format!("asg {x1_id} 0")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n";
    std::fs::write(&cache, tampered).unwrap();
    let check = tate(&["compare", &doc, "--load-cache", cache.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(1), "{}", stdout(&check));
    assert!(stdout(&check).contains("chain map: FAIL"));
}

#[test]
fn run_executes_the_document_command_list() {
    let out = tate(&["run", &corpus("p2_hypersurface.json")]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("closure variables:"));
    assert!(text.contains("classification:"));
    assert!(text.contains("summary: PASS"));
}

#[test]
fn betti_and_poincare_commands() {
    let out = tate(&["betti", &corpus("p2_hypersurface.json")]);
    assert!(out.status.success());
    let text = stdout(&out);
    for h in 0..=9 {
        assert!(text.contains(&format!("{h}     1")), "rank 1 in degree {h}: {text}");
    }
    let out = tate(&["poincare", &corpus("p2_golod.json"), "--format", "structured"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("check name=poincare-closure pass=true"));
    assert!(text.contains("check name=poincare-model pass=true"));
}

#[test]
fn deviations_in_structured_form_carry_the_certified_window() {
    let out = tate(&["deviations", &corpus("p3_hypersurface.json"), "--format", "structured"]);
    assert!(out.status.success());
    let text = stdout(&out);
    // every numeric record names the window it is certified in
    for line in text.lines().filter(|l| l.starts_with("deviation ")) {
        assert!(line.contains("cert=8,12"), "{line}");
    }
    assert!(text.contains("deviation i=2 eps=1 gamma=1 predicted=1 agree=true"));
    assert!(text.contains("deviation i=7 eps=1 gamma=0 predicted=1 agree=true"));
}
