use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn steiner(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steiner")).args(args).env_remove("STEINER_WORKERS").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = steiner(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const UNREACHABLE: &str = "SECTION Graph\nNodes 4\nArcs 2\nA 1 2 1\nA 2 3 1\nEND\n\n\
SECTION Terminals\nTerminals 3\nRoot 1\nT 1\nT 3\nT 4\nEND\n\nEOF\n";

#[test]
fn unreachable_terminal_is_certified_no() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "u.stp");
    fs::write(&inst, UNREACHABLE).unwrap();
    let out = steiner(&["solve-dst", s(&inst), "--p", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let out = steiner(&["solve-dst", s(&inst), "--exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_and_infeasible_codes() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.stp");
    fs::write(&bad, "SECTION Graph\nNodes 2\nEdges 1\nE 1 2 1\nEND\nSECTION Terminals\nTerminals 1\nT 9\nEND\nEOF\n").unwrap();
    let out = steiner(&["solve-st", s(&bad)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 8"));

    let split = path(&dir, "split.stp");
    fs::write(&split, "SECTION Graph\nNodes 4\nEdges 1\nE 1 2 1\nEND\nSECTION Pairs\nPairs 1\nP 1 4\nEND\nEOF\n").unwrap();
    assert_eq!(steiner(&["solve-sf", s(&split), "--exact"]).status.code(), Some(2));

    let forest = path(&dir, "f.stp");
    ok(&["gen", "random", "--seed", "1", "-o", s(&forest)]);
    assert_eq!(steiner(&["solve-st", s(&forest)]).status.code(), Some(4));
    assert_eq!(steiner(&["solve-sf", s(&forest), "--epsilon", "0"]).status.code(), Some(4));
    let out = Command::new(env!("CARGO_BIN_EXE_steiner"))
        .args(["solve-sf", s(&forest)])
        .env("STEINER_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn reduce_then_lift_matches_solve() {
    let dir = TempDir::new().unwrap();
    for seed in 0..6 {
        let inst = path(&dir, &format!("f{seed}.stp"));
        let mut args = vec!["gen", "random", "--n", "10", "--terminals", "6", "--planted-p", "1", "--planted-c", "2"];
        let seed_s = seed.to_string();
        args.extend(["--seed", &seed_s, "-o", s(&inst)]);
        ok(&args);
        for eps in ["1", "3"] {
            let direct = ok(&["solve-sf", s(&inst), "--epsilon", eps, "--p", "1", "--c", "2"]);
            let (reduced, trace, rsol) = (path(&dir, "r.stp"), path(&dir, "r.json"), path(&dir, "r.sol"));
            ok(&["reduce", s(&inst), "--epsilon", eps, "--p", "1", "--c", "2", "--out", s(&reduced), "--trace", s(&trace)]);
            ok(&["solve-sf", s(&reduced), "--exact", "--c", "2", "-o", s(&rsol)]);
            let lifted = ok(&["lift", s(&inst), "--trace", s(&trace), "--solution", s(&rsol)]);
            assert_eq!(direct, lifted, "seed {seed} eps {eps}");
        }
    }
}

#[test]
fn path_instance_contracts_and_lifts() {
    // 16 unit edges on a path, every vertex paired with vertex 1
    let dir = TempDir::new().unwrap();
    let n = 17;
    let mut text = format!("SECTION Graph\nNodes {n}\nEdges {}\n", n - 1);
    for v in 1..n {
        text += &format!("E {v} {} 1\n", v + 1);
    }
    text += &format!("END\nSECTION Pairs\nPairs {}\n", n - 1);
    for v in 2..=n {
        text += &format!("P 1 {v}\n");
    }
    text += "END\nEOF\n";
    let inst = path(&dir, "path.stp");
    fs::write(&inst, text).unwrap();
    let report = path(&dir, "report.jsonl");
    let direct = ok(&["solve-sf", s(&inst), "--epsilon", "6", "--p", "0", "--c", "1", "--report", s(&report)]);
    let rec: serde_json::Value = serde_json::from_str(fs::read_to_string(&report).unwrap().trim()).unwrap();
    assert_eq!(rec["tau"], 3);
    assert!(rec["contractions"].as_u64().unwrap() > 0);
    assert!(rec["residual_terminals"].as_u64().unwrap() < 3);
    assert!(direct.contains("Value 16\n"));

    let (reduced, trace, rsol) = (path(&dir, "r.stp"), path(&dir, "r.json"), path(&dir, "r.sol"));
    ok(&["reduce", s(&inst), "--epsilon", "6", "--p", "0", "--c", "1", "--out", s(&reduced), "--trace", s(&trace)]);
    ok(&["solve-sf", s(&reduced), "--exact", "--c", "1", "-o", s(&rsol)]);
    assert_eq!(ok(&["lift", s(&inst), "--trace", s(&trace), "--solution", s(&rsol)]), direct);
}

#[test]
fn directed_reduce_and_lift() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "d.stp");
    ok(&["gen", "random", "--directed", "--n", "9", "--terminals", "4", "--planted-p", "1", "--seed", "4", "-o", s(&inst)]);
    let direct = ok(&["solve-dst", s(&inst), "--p", "1", "--epsilon", "1"]);
    let (reduced, trace, rsol) = (path(&dir, "r.stp"), path(&dir, "r.json"), path(&dir, "r.sol"));
    ok(&["reduce", s(&inst), "--p", "1", "--out", s(&reduced), "--trace", s(&trace)]);
    ok(&["solve-dst", s(&reduced), "--exact", "-o", s(&rsol)]);
    assert_eq!(ok(&["lift", s(&inst), "--trace", s(&trace), "--solution", s(&rsol)]), direct);
}

#[test]
fn kernel_lift_is_exact_with_large_subsets() {
    let dir = TempDir::new().unwrap();
    for seed in 0..4 {
        let inst = path(&dir, "t.stp");
        let seed_s = seed.to_string();
        ok(&["gen", "random", "--tree", "--n", "9", "--terminals", "4", "--seed", &seed_s, "-o", s(&inst)]);
        let exact = ok(&["solve-st", s(&inst), "--exact"]);
        let (kern, prov, ksol) = (path(&dir, "k.stp"), path(&dir, "k.json"), path(&dir, "k.sol"));
        ok(&["kernelize", s(&inst), "--subset-size", "4", "--out", s(&kern), "--provenance", s(&prov)]);
        ok(&["solve-st", s(&kern), "--exact", "-o", s(&ksol)]);
        let lifted = ok(&["lift", s(&inst), "--trace", s(&prov), "--solution", s(&ksol)]);
        let value = |t: &str| t.lines().find(|l| l.starts_with("Value")).unwrap().to_string();
        assert_eq!(value(&lifted), value(&exact));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "f.stp");
    ok(&["gen", "random", "--n", "12", "--terminals", "6", "--planted-p", "2", "--seed", "9", "-o", s(&inst)]);
    let again = path(&dir, "g.stp");
    ok(&["gen", "random", "--n", "12", "--terminals", "6", "--planted-p", "2", "--seed", "9", "-o", s(&again)]);
    assert_eq!(fs::read(&inst).unwrap(), fs::read(&again).unwrap());
    let a = ok(&["solve-sf", s(&inst), "--epsilon", "1/2", "--p", "2"]);
    let b = ok(&["solve-sf", s(&inst), "--epsilon", "1/2", "--p", "2"]);
    assert_eq!(a, b);
    let (t1, t2) = (path(&dir, "t1.json"), path(&dir, "t2.json"));
    let r = path(&dir, "r.stp");
    ok(&["reduce", s(&inst), "--out", s(&r), "--trace", s(&t1)]);
    ok(&["reduce", s(&inst), "--out", s(&r), "--trace", s(&t2)]);
    assert_eq!(fs::read(&t1).unwrap(), fs::read(&t2).unwrap());
}

#[test]
fn oracle_and_generators() {
    let dir = TempDir::new().unwrap();
    let ds = path(&dir, "ds.stp");
    ok(&["gen", "dominating-set", "--n", "5", "--m", "4", "--seed", "2", "-o", s(&ds)]);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ds.meta.json")).unwrap()).unwrap();
    let want = format!("Value {}\n", meta["min_dominating_set"]);
    assert!(ok(&["solve-dst", s(&ds), "--exact"]).contains(&want));
    assert!(ok(&["oracle", s(&ds)]).contains(&want));

    let gap = path(&dir, "gap.stp");
    ok(&["gen", "gap", "--singletons", "--n", "3", "--m", "3", "--b", "1", "--gamma", "3", "-o", s(&gap)]);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("gap.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["no_side"], true);
    let sol = ok(&["solve-dst", s(&gap), "--exact"]);
    let value: u64 = sol.lines().find_map(|l| l.strip_prefix("Value ")).unwrap().parse().unwrap();
    assert!(value >= meta["no_lower"].as_u64().unwrap());

    let f = path(&dir, "f.stp");
    ok(&["gen", "random", "--planted-p", "0", "--planted-c", "2", "--seed", "3", "-o", s(&f)]);
    let restricted = ok(&["oracle", s(&f), "--max-steiner", "0", "--max-components", "2"]);
    let free = ok(&["oracle", s(&f)]);
    let v = |t: &str| -> String { t.lines().find(|l| l.starts_with("Value")).unwrap().into() };
    assert!(steiner_value(&v(&free)) <= steiner_value(&v(&restricted)));
}

fn steiner_value(line: &str) -> f64 {
    let raw = line.trim_start_matches("Value ");
    match raw.split_once('/') {
        Some((a, b)) => a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap(),
        None => raw.parse().unwrap(),
    }
}

#[test]
fn bench_emits_table_and_records() {
    let dir = TempDir::new().unwrap();
    let report = path(&dir, "bench.jsonl");
    let out = Command::new(env!("CARGO_BIN_EXE_steiner"))
        .args(["bench", "--count", "3", "--seed", "7", "--report", s(&report)])
        .env("STEINER_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("solver"));
    assert_eq!(lines.len(), 7);
    for row in &lines[1..] {
        assert!(row.trim_end().ends_with(" 0"), "violations in {row}");
    }
    let records = fs::read_to_string(&report).unwrap();
    let parsed: Vec<serde_json::Value> = records.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    // 9 instances: one oracle record and two solver cells each
    assert_eq!(parsed.len(), 27);
    assert!(parsed.iter().all(|r| r["instance"].is_string() && r["wall_ms"].is_number()));
}
