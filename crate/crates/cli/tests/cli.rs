use std::path::Path;
use std::process::{Command, Output};

use inner_series::estimate::{accumulate_moments, build_grid, default_min_count, estimate_velocity, DiffScheme};
use inner_series::frames::{build_frame_field, FrameOptions};
use inner_series::ingest::{gen_sine, read_csv_weights};
use inner_series::weights::compute_weights;
use serde_json::Value;

fn inner(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_inner"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = inner(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn file_pipeline_matches_in_memory_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "sine", "--samples", "6000", "-o", "x.csv"]);
    ok(d, &["velocity", "-i", "x.csv", "-o", "v.csv"]);
    ok(
        d,
        &[
            "grid",
            "-i",
            "x.csv",
            "--velocity",
            "v.csv",
            "--bins",
            "24",
            "-o",
            "grid.json",
        ],
    );
    ok(
        d,
        &["moments", "-i", "x.csv", "--grid", "grid.json", "-o", "moments.json"],
    );
    ok(
        d,
        &[
            "frames",
            "-i",
            "x.csv",
            "--grid",
            "grid.json",
            "--moments",
            "moments.json",
            "-o",
            "frames.json",
        ],
    );
    ok(d, &["weights", "-i", "x.csv", "--frames", "frames.json", "-o", "w.csv"]);

    let traj = gen_sine(1.0, 0.01, 6000).unwrap();
    let vel = estimate_velocity(&traj, DiffScheme::Central).unwrap();
    let grid = build_grid(&traj, Some(vel.valid_mask()), &[24], default_min_count(1)).unwrap();
    let moments = accumulate_moments(&traj, &vel, &grid).unwrap();
    let (field, _) = build_frame_field(&grid, &moments, &FrameOptions::default()).unwrap();
    let expected = compute_weights(&traj, &vel, &field).unwrap();
    let written = read_csv_weights(d.join("w.csv")).unwrap();
    assert_eq!(written.valid_mask(), expected.valid_mask());
    assert_eq!(written.as_flat(), expected.as_flat());

    ok(
        d,
        &[
            "reconstruct",
            "--weights",
            "w.csv",
            "--frames",
            "frames.json",
            "--x0",
            "0.01",
            "--steps",
            "200",
            "-o",
            "r.csv",
        ],
    );
    let r = std::fs::read_to_string(d.join("r.csv")).unwrap();
    assert_eq!(r.lines().count(), 1 + 201);
}

#[test]
fn json_and_wav_series_feed_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "synth",
            "sources",
            "--samples",
            "20000",
            "--seed",
            "3",
            "--format",
            "wav",
            "-o",
            "s.wav",
        ],
    );
    ok(d, &["synth", "sine", "--samples", "3000", "-o", "x.json"]);
    ok(d, &["grid", "-i", "s.wav", "--bins", "4,4", "-o", "grid.json"]);
    let grid = json(&d.join("grid.json"));
    assert_eq!(grid["schema"], "inner-series/grid/1");
    assert_eq!(grid["edges"].as_array().unwrap().len(), 2);
    ok(d, &["velocity", "-i", "x.json", "--format", "json", "-o", "v.json"]);
    let v = json(&d.join("v.json"));
    assert_eq!(v["samples"].as_array().unwrap().len(), 3000);
    assert_eq!(v["valid"][0], false);
}

#[test]
fn sine_experiment_passes_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(d, &["experiment", "sine", "--out-dir", "a"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("sine-sign-match [PASS]"), "{stdout}");
    assert!(!stdout.contains("FAIL"));
    ok(d, &["experiment", "sine", "--out-dir", "b"]);
    let a = std::fs::read(d.join("a/sine/report.json")).unwrap();
    let b = std::fs::read(d.join("b/sine/report.json")).unwrap();
    assert!(a == b, "reports differ between runs");
    let report = json(&d.join("a/sine/report.json"));
    assert_eq!(report["schema"], "inner-series/report/1");
    assert_eq!(report["pass"], true);
    for (_, file) in report["artifacts"].as_object().unwrap() {
        assert!(d.join("a/sine").join(file.as_str().unwrap()).exists(), "missing {file}");
    }
}

#[test]
fn identity_transform_gives_unit_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("identity.json"), r#"{"kind": "identity"}"#).unwrap();
    let out = ok(
        d,
        &[
            "experiment",
            "monotone-1d",
            "--samples",
            "100000",
            "--transform",
            "identity.json",
            "--out-dir",
            "r",
        ],
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("identity-correlation-deviation [PASS]"), "{stdout}");
}

#[test]
fn failed_threshold_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "sine", "--samples", "4000", "-o", "x.csv"]);
    ok(d, &["grid", "-i", "x.csv", "--bins", "16", "-o", "grid.json"]);
    ok(d, &["moments", "-i", "x.csv", "--grid", "grid.json", "-o", "m.json"]);
    ok(
        d,
        &[
            "frames",
            "-i",
            "x.csv",
            "--grid",
            "grid.json",
            "--moments",
            "m.json",
            "-o",
            "f.json",
        ],
    );
    ok(d, &["weights", "-i", "x.csv", "--frames", "f.json", "-o", "w.csv"]);
    ok(
        d,
        &[
            "align",
            "--reference",
            "w.csv",
            "--other",
            "w.csv",
            "--min-correlation",
            "0.999",
        ],
    );
    let out = inner(
        d,
        &[
            "separability",
            "--mixture",
            "w.csv",
            "--source",
            "w.csv",
            "--min-match",
            "1.5",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = inner(d, &["velocity", "-i", "missing.csv", "-o", "v.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
    assert_eq!(inner(d, &["experiment", "no-such-experiment"]).status.code(), Some(2));
    ok(d, &["synth", "sine", "--samples", "4000", "-o", "x.csv"]);
    ok(
        d,
        &["synth", "sine", "--samples", "4000", "--amplitude", "2", "-o", "y.csv"],
    );
    ok(d, &["grid", "-i", "x.csv", "--bins", "16", "-o", "grid.json"]);
    // a grid built from one trajectory does not apply to another
    assert_eq!(
        inner(d, &["moments", "-i", "y.csv", "--grid", "grid.json", "-o", "m.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn plot_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "latent", "--samples", "12000", "-o", "u.csv"]);
    ok(
        d,
        &["plot", "-i", "u.csv", "--start", "100", "--len", "400", "-o", "a.svg"],
    );
    ok(
        d,
        &["plot", "-i", "u.csv", "--start", "100", "--len", "400", "-o", "b.svg"],
    );
    let a = std::fs::read(d.join("a.svg")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.svg")).unwrap());
    assert!(a.starts_with(b"<svg"));
    assert_eq!(
        inner(d, &["plot", "-i", "u.csv", "--len", "0", "-o", "c.svg"])
            .status
            .code(),
        Some(2)
    );
}
