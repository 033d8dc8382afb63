mod common;

use std::io::Write;
use std::path::Path;
use std::process::{Command, Stdio};

use common::*;
use tempfile::tempdir;

fn core_fixture(name: &str) -> String {
    format!(
        "{}/../core/tests/fixtures/{name}",
        env!("CARGO_MANIFEST_DIR")
    )
}

#[test]
fn serve_synthetic_replays_golden_transcript() {
    let requests = std::fs::read(core_fixture("transcript_requests.jsonl")).unwrap();
    let expected = std::fs::read_to_string(core_fixture("transcript_responses.jsonl")).unwrap();
    let mut child = Command::new(BIN)
        .args([
            "serve-synthetic",
            "--synthetic",
            &core_fixture("transcript_scenes.json"),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&requests).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

fn propagate(data: &Path, out: &Path, extra: &[&str]) {
    let manifest = data.join("manifest.json");
    let mut args = vec!["propagate", "--manifest", s(&manifest), "--out", s(out)];
    args.extend_from_slice(extra);
    ok(&args);
}

fn miou(pred_manifest: &Path, gt_manifest: &Path) -> String {
    let csv = ok(&[
        "evaluate",
        "--pred",
        s(pred_manifest),
        "--gt",
        s(gt_manifest),
    ]);
    let line = csv.lines().find(|l| l.starts_with("mIoU,")).unwrap();
    line.split(',').nth(1).unwrap().to_owned()
}

/// Label maps written by a run, ignoring the manifest whose paths embed the
/// output directory.
fn rasters(dir: &Path) -> std::collections::BTreeMap<std::path::PathBuf, Vec<u8>> {
    let mut snap = snapshot(dir);
    snap.retain(|p, _| p.extension().is_some_and(|e| e == "png"));
    snap
}

#[test]
fn propagation_is_exact_and_backend_independent() {
    let dir = tempdir().unwrap();
    let data = synth(&dir.path().join("data"), 11, 6);
    let scenes = data.join("scenes.json");

    let inproc = dir.path().join("inproc");
    propagate(&data, &inproc, &["--synthetic", s(&scenes)]);
    assert_eq!(
        miou(&inproc.join("manifest.json"), &data.join("gt.json")),
        "100.00"
    );

    let cmd = format!("{BIN} serve-synthetic --synthetic {}", s(&scenes));
    let subproc = dir.path().join("subproc");
    propagate(&data, &subproc, &["--backend-cmd", &cmd, "--jobs", "3"]);
    assert_eq!(rasters(&inproc), rasters(&subproc));
    assert_eq!(rasters(&inproc).len(), 12);

    let env = dir.path().join("env");
    let out = Command::new(BIN)
        .args([
            "propagate",
            "--manifest",
            s(&data.join("manifest.json")),
            "--out",
            s(&env),
        ])
        .env("ANNOB_BACKEND_CMD", &cmd)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(rasters(&inproc), rasters(&env));
}

#[test]
fn output_is_independent_of_job_count() {
    let dir = tempdir().unwrap();
    let data = synth(&dir.path().join("data"), 4, 8);
    let scenes = data.join("scenes.json");
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    propagate(&data, &one, &["--synthetic", s(&scenes), "--jobs", "1"]);
    propagate(&data, &four, &["--synthetic", s(&scenes), "--jobs", "4"]);
    assert_eq!(rasters(&one), rasters(&four));
    let m1 = replace_in(&one.join("manifest.json"), s(&one), "OUT");
    let m4 = replace_in(&four.join("manifest.json"), s(&four), "OUT");
    assert_eq!(m1, m4);
}

#[test]
fn refinement_improves_coarse_labels() {
    let dir = tempdir().unwrap();
    let data = synth(&dir.path().join("data"), 21, 6);
    let scenes = data.join("scenes.json");
    let gt = data.join("gt.json");
    let coarse: f64 = miou(&data.join("coarse.json"), &gt).parse().unwrap();

    let prompted = dir.path().join("prompted");
    ok(&[
        "refine-coarse",
        "--seed",
        "5",
        "--synthetic",
        s(&scenes),
        "--manifest",
        s(&data.join("coarse.json")),
        "--out",
        s(&prompted),
    ]);
    let refined: f64 = miou(&prompted.join("manifest.json"), &gt).parse().unwrap();
    assert!(refined >= coarse, "{refined} < {coarse}");

    let consensus = dir.path().join("consensus");
    ok(&[
        "refine-consensus",
        "--synthetic",
        s(&scenes),
        "--manifest",
        s(&data.join("coarse.json")),
        "--out",
        s(&consensus),
    ]);
    assert_eq!(miou(&consensus.join("manifest.json"), &gt), "100.00");

    let manifest = std::fs::read_to_string(prompted.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"generated\""));
    assert!(!manifest.contains("\"coarse\""));
}

#[test]
fn failing_backend_exits_nonzero_but_writes_manifest() {
    let dir = tempdir().unwrap();
    let data = synth(&dir.path().join("data"), 3, 2);
    let out = dir.path().join("out");
    let run = annob(&[
        "propagate",
        "--manifest",
        s(&data.join("manifest.json")),
        "--out",
        s(&out),
        "--backend-cmd",
        "/nonexistent/backend",
    ]);
    assert_eq!(code(&run), 2);
    assert!(stderr(&run).contains("2 of 2 clips failed"));
    assert!(out.join("manifest.json").exists());
}
