//! Runs the `odscope` binary against the shipped toy city.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const SCENARIOS: [&str; 3] = ["baseline", "partial", "full"];
pub const SLICE: &str = "2025-06-10,AM,08:00";
/// Coarser than the default so the toy panel stays small.
pub const CELL_SIZE: &str = "1000";

pub fn toy(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy_city").join(rel)
}

pub fn odscope<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_odscope")).args(args).output().expect("binary runs")
}

/// Runs and asserts success, returning stdout.
pub fn ok<I, S>(args: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = odscope(args);
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}

pub fn ingest(root: &Path) -> PathBuf {
    let out = root.join("merged");
    ok([
        "ingest", "--feed", &p(&toy("stib")), "--prefix", "stib", "--feed", &p(&toy("sncb")), "--prefix", "sncb",
        "--out", &p(&out),
    ]);
    out
}

pub fn scenarios(root: &Path, merged: &Path) -> Vec<(String, PathBuf)> {
    SCENARIOS
        .iter()
        .map(|s| {
            let out = root.join("scenarios").join(s);
            ok(["scenario", "--base", &p(merged), "--builtin", s, "--dates", "2025-06-10", "--out", &p(&out)]);
            (s.to_string(), out)
        })
        .collect()
}

pub fn matrix_args(scen: &[(String, PathBuf)], out: &Path, threads: usize) -> Vec<String> {
    let mut a: Vec<String> = vec!["matrix".into()];
    for (name, dir) in scen {
        a.push("--scenario".into());
        a.push(format!("{name}={}", p(dir)));
    }
    a.extend(
        ["--boundary", &p(&toy("boundary.geojson")), "--cell-size", CELL_SIZE, "--slice", SLICE]
            .map(String::from),
    );
    a.extend(["--threads".into(), threads.to_string(), "--out".into(), p(out)]);
    a
}

/// ingest -> scenario -> matrix -> analyze -> monetise under `root`.
pub fn pipeline(root: &Path, threads: usize) {
    let merged = ingest(root);
    let scen = scenarios(root, &merged);
    let panel = root.join("panel");
    ok(matrix_args(&scen, &panel, threads));
    let analysis = root.join("analysis");
    ok(["analyze", "--panel", &p(&panel), "--out", &p(&analysis)]);
    ok([
        "monetise", "--summary", &p(&analysis.join("summary.csv")), "--comparison", "full", "--trips", "5e8",
        "--vot", "15", "--rate", "0.04", "--years", "40", "--om", "4e7", "--out", &p(&root.join("money")),
    ]);
}

/// Every file below `dir` by relative path.
pub fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

pub fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}
