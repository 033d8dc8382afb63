#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

pub const BIN: &str = env!("CARGO_BIN_EXE_annob");

pub fn annob(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .stdin(Stdio::null())
        .output()
        .expect("annob runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Runs annob and asserts success, returning stdout.
pub fn ok(args: &[&str]) -> String {
    let out = annob(args);
    assert_eq!(code(&out), 0, "annob {args:?} failed: {}", stderr(&out));
    stdout(&out)
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Every regular file under `root`, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Generates a synthetic dataset under `dir` and returns `dir`.
pub fn synth(dir: &Path, seed: u64, scenes: usize) -> PathBuf {
    ok(&[
        "synth",
        "--seed",
        &seed.to_string(),
        "--scenes",
        &scenes.to_string(),
        "--out",
        s(dir),
    ]);
    dir.to_path_buf()
}

/// Replaces every occurrence of `from` in a file.
pub fn replace_in(path: &Path, from: &str, to: &str) -> String {
    fs::read_to_string(path)
        .expect("readable")
        .replace(from, to)
}
