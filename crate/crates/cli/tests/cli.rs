use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bisar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bisar"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = bisar(args);
    assert!(
        out.status.success(),
        "bisar {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path
}

fn generated(json: &str) -> (TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), json);
    let data = tmp.path().join("data");
    ok(&["generate", "--config", s(&cfg), "--out", s(&data)]);
    (tmp, data)
}

const SMALL: &str = r#"{"seed": 5, "clips_per_class": 5, "monostatic_clips_per_class": 0}"#;
const BINNED: &str = r#"{"seed": 5, "clips_per_class": 18, "monostatic_clips_per_class": 0}"#;

fn clip_files(data: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(data.join("clips"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}

#[test]
fn generate_writes_clips_and_manifest() {
    let (_tmp, data) = generated(r#"{"seed": 5, "clips_per_class": 5, "monostatic_clips_per_class": 0,
        "sweep": {"center_hz": 1e9, "bandwidth_hz": 450e6, "count": 64}}"#);
    assert_eq!(clip_files(&data).len(), 40);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(data.join("manifest.json")).unwrap()).unwrap();
    let res = manifest["theoretical_resolution_m"].as_f64().unwrap();
    assert!((res - 0.333).abs() < 1e-3, "{res}");
    assert_eq!(manifest["clips"].as_array().unwrap().len(), 40);
    assert_eq!(manifest["seed"].as_u64(), Some(5));
}

#[test]
fn bad_config_is_rejected_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), r#"{"seed": 1, "colour": "red"}"#);
    let out = bisar(&["generate", "--config", s(&cfg), "--out", s(&tmp.path().join("d"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("colour") && err.contains("line 1"), "{err}");

    let cfg = config(tmp.path(), r#"{"clips_per_class": 2}"#);
    let out = bisar(&["generate", "--config", s(&cfg), "--out", s(&tmp.path().join("d"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

fn pipeline(root: &Path) -> Vec<(String, Vec<u8>)> {
    let cfg = config(root, BINNED);
    let data = root.join("data");
    let model = root.join("model.batm");
    let report = root.join("report");
    ok(&["generate", "--config", s(&cfg), "--out", s(&data)]);
    ok(&["train", "--data", s(&data), "--out", s(&model)]);
    ok(&[
        "evaluate", "--data", s(&data), "--model", s(&model), "--out", s(&report), "--roc", "--angle-bins",
    ]);
    let mut files: Vec<PathBuf> = clip_files(&data);
    files.push(data.join("manifest.json"));
    files.push(model);
    for e in fs::read_dir(&report).unwrap() {
        files.push(e.unwrap().path());
    }
    files.sort();
    files
        .into_iter()
        .map(|p| (p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()))
        .collect()
}

#[test]
fn pipeline_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    assert_eq!(first.len(), second.len());
    for ((na, ba), (nb, bb)) in first.iter().zip(&second) {
        assert_eq!(na, nb);
        assert!(ba == bb, "{na} differs between runs");
    }
    assert!(first.iter().any(|(n, _)| n.ends_with("accuracy.csv")));
    assert!(first.iter().any(|(n, _)| n.ends_with("angle_bins.csv")));
}

#[test]
fn train_reports_variance_and_templates() {
    let (tmp, data) = generated(SMALL);
    let out = ok(&["train", "--data", s(&data), "--out", s(&tmp.path().join("p.batm")), "--n", "10"]);
    assert!(out.contains("variance_fraction(n=10)"), "{out}");

    let (tmp, data) = generated(BINNED);
    let out = ok(&[
        "train", "--data", s(&data), "--out", s(&tmp.path().join("c.batm")), "--classifier", "cgbc",
        "--bin-width", "10",
    ]);
    assert!(out.contains("class\tbin\tazimuth\tclips"), "{out}");
    assert!(out.lines().filter(|l| l.starts_with("MBT\t")).count() > 0);
}

#[test]
fn too_many_components_fails_with_hint() {
    let (tmp, data) = generated(SMALL);
    let out = bisar(&["train", "--data", s(&data), "--out", s(&tmp.path().join("m.batm")), "--n", "200"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rank deficient") && err.contains("hint:"), "{err}");
    assert!(!tmp.path().join("m.batm").exists());
}

#[test]
fn evaluate_rejects_a_model_from_another_dataset() {
    let (tmp, data) = generated(SMALL);
    let other_cfg = tmp.path().join("other.json");
    fs::write(&other_cfg, r#"{"seed": 6, "clips_per_class": 5, "monostatic_clips_per_class": 0}"#).unwrap();
    let other = tmp.path().join("other");
    ok(&["generate", "--config", s(&other_cfg), "--out", s(&other)]);
    let model = tmp.path().join("m.batm");
    ok(&["train", "--data", s(&other), "--out", s(&model), "--n", "10"]);
    let out = bisar(&["evaluate", "--data", s(&data), "--model", s(&model), "--out", s(&tmp.path().join("r"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("hash mismatch"));
}

#[test]
fn roc_and_angle_bin_reports() {
    let (tmp, data) = generated(BINNED);
    let model = tmp.path().join("m.batm");
    let report = tmp.path().join("r");
    ok(&["train", "--data", s(&data), "--out", s(&model)]);
    ok(&[
        "evaluate", "--data", s(&data), "--model", s(&model), "--out", s(&report), "--roc", "--angle-bins",
    ]);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(report.join("summary.json")).unwrap()).unwrap();
    let aucs = summary["auc"].as_array().unwrap();
    assert_eq!(aucs.len(), 4);
    for entry in aucs {
        assert_eq!(entry[1].as_f64(), Some(1.0), "{entry}");
    }
    for class in ["APC", "MBT", "MSL", "STR"] {
        let roc = fs::read_to_string(report.join(format!("roc_{class}.csv"))).unwrap();
        assert!(roc.starts_with("config_hash,target,threshold,fpr,tpr\n"));
    }
    let bins = fs::read_to_string(report.join("angle_bins.csv")).unwrap();
    assert_eq!(bins.lines().count(), 4, "{bins}");
    let hash = summary["config_hash"].as_str().unwrap();
    for line in bins.lines().skip(1) {
        assert!(line.starts_with(hash));
    }
}

#[test]
fn empty_bins_are_reported_and_the_run_continues() {
    let (tmp, data) = generated(SMALL);
    let model = tmp.path().join("m.batm");
    let report = tmp.path().join("r");
    ok(&["train", "--data", s(&data), "--out", s(&model), "--n", "10"]);
    let out = bisar(&["evaluate", "--data", s(&data), "--model", s(&model), "--out", s(&report), "--angle-bins"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty bin"));
    let bins = fs::read_to_string(report.join("angle_bins.csv")).unwrap();
    assert_eq!(bins.lines().count(), 2, "{bins}");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(report.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["errors"].as_array().unwrap().len(), 2);
}

#[test]
fn polar_sweep_and_cube_inspection() {
    let (tmp, data) = generated(
        r#"{"seed": 5, "clips_per_class": 6, "monostatic_clips_per_class": 0,
            "polarimetry": {"enabled": true}}"#,
    );
    let model = tmp.path().join("m.batm");
    let report = tmp.path().join("r");
    let out = ok(&["train", "--data", s(&data), "--out", s(&model), "--classifier", "md-pcann"]);
    assert!(out.contains("parameters A0,B0,B,C,D,E,F,G,H,A,I,J,K,L,M,N"), "{out}");
    ok(&["evaluate", "--data", s(&data), "--model", s(&model), "--out", s(&report), "--polar-sweep", "prefix"]);
    let csv = fs::read_to_string(report.join("polar_prefix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
    assert!(csv.lines().next().unwrap().contains("accuracy_MBT"));

    let cube = clip_files(&data).into_iter().find(|p| s(p).ends_with("_cube.bsar")).unwrap();
    let out = ok(&["inspect", s(&cube)]);
    assert!(out.contains("P = 16"), "{out}");
    assert!(out.contains("parameters A0,B0"), "{out}");
}

#[test]
fn inspect_reports_clip_summary_and_parse_offsets() {
    let (tmp, data) = generated(SMALL);
    let clip = &clip_files(&data)[0];
    let out = ok(&["inspect", s(clip)]);
    for needle in ["channel HH", "size 32x32", "peak (", "energy", "-3 dB width"] {
        assert!(out.contains(needle), "{needle} missing from\n{out}");
    }
    let bytes = fs::read(clip).unwrap();
    let truncated = tmp.path().join("short.bsar");
    fs::write(&truncated, &bytes[..100]).unwrap();
    let out = bisar(&["inspect", s(&truncated)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at byte"));
}

#[test]
fn thread_count_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    let run = |threads: &str, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_bisar"))
            .env("BISAR_THREADS", threads)
            .args(["generate", "--config", s(&cfg), "--out", s(&tmp.path().join(out))])
            .output()
            .unwrap()
    };
    assert!(run("1", "one").status.success());
    assert!(run("0", "auto").status.success());
    assert_eq!(
        fs::read(tmp.path().join("one/manifest.json")).unwrap(),
        fs::read(tmp.path().join("auto/manifest.json")).unwrap()
    );
    let bad = run("many", "bad");
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("BISAR_THREADS"));
}
