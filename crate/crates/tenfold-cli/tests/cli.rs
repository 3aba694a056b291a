//! End-to-end runs of the binary: exit codes, report contents, and the
//! determinism of machine-readable output.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use serde_json::Value;
use tenfold::mat::CMat;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tenfold"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .env_remove("TENFOLD_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tenfold-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_matrix(dir: &Path, name: &str, m: &CMat, kind: Option<&str>) -> PathBuf {
    let data: Vec<[f64; 2]> = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| [m[(i, j)].re, m[(i, j)].im]))
        .collect();
    let mut file = serde_json::json!({
        "rows": m.nrows(),
        "cols": m.ncols(),
        "data": data,
    });
    if let Some(kind) = kind {
        file["metadata"] = serde_json::json!({ "kind": kind });
    }
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
    path
}

fn j2() -> CMat {
    CMat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => Complex64::new(1.0, 0.0),
        (1, 0) => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 0.0),
    })
}

fn report_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn result_value<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|item| item["name"] == name)
        .unwrap_or_else(|| panic!("result {name} missing"))
        .get("value")
        .unwrap()
}

fn strip_timing(bytes: &[u8]) -> Vec<u8> {
    let text = String::from_utf8_lossy(bytes);
    let cut = text.rfind("\"timing_ms\"").expect("timing field present");
    text[..cut].as_bytes().to_vec()
}

#[test]
fn classify_j2_reports_aii() {
    let dir = work_dir("classify-aii");
    write_matrix(&dir, "t.json", &j2(), Some("time_reversal"));
    let out = run(&["classify", "--sym", "t.json", "--json", "r.json"], &dir);
    assert_eq!(out.status.code(), Some(0), "stderr: {:?}", out.stderr);
    let text = stdout_of(&out);
    assert!(text.contains("class = AII"), "stdout: {text}");
    assert!(text.contains("signature = (0,0,-1)"), "stdout: {text}");
    let report = report_json(&dir.join("r.json"));
    assert_eq!(result_value(&report, "class"), "AII");
    assert_eq!(result_value(&report, "signature"), "(0,0,-1)");
}

#[test]
fn classify_identity_regular_is_class_a() {
    let dir = work_dir("classify-a");
    let one = CMat::from_fn(1, 1, |_, _| Complex64::new(1.0, 0.0));
    write_matrix(&dir, "u.json", &one, Some("regular"));
    let out = run(&["classify", "--sym", "u.json"], &dir);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("class = A\n"));
}

#[test]
fn missing_kind_tag_is_usage_error() {
    let dir = work_dir("no-kind");
    write_matrix(&dir, "u.json", &j2(), None);
    let out = run(&["classify", "--sym", "u.json"], &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("metadata.kind"));
}

#[test]
fn truncated_data_names_expected_length() {
    let dir = work_dir("truncated");
    fs::write(
        dir.join("short.json"),
        r#"{"rows":2,"cols":2,"data":[[1,0],[0,0],[0,0]]}"#,
    )
    .unwrap();
    let out = run(&["classify", "--sym", "short.json"], &dir);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(err.contains("expected rows x cols = 4"), "stderr: {err}");
}

#[test]
fn unknown_class_label_is_usage_error() {
    let dir = work_dir("bad-label");
    write_matrix(&dir, "h.json", &j2(), None);
    let out = run(
        &["check-hamiltonian", "--class", "XY", "--n", "2", "--in", "h.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cross_class_check_fails_with_inputs_hash() {
    let dir = work_dir("cross-class");
    let sampled = run(
        &["sample", "--class", "AII", "--n", "4", "--seed", "7", "--out", "h.json"],
        &dir,
    );
    assert_eq!(sampled.status.code(), Some(0));
    let out = run(
        &[
            "check-hamiltonian", "--class", "D", "--n", "4", "--in", "h.json",
            "--json", "r.json",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(1));
    let report = report_json(&dir.join("r.json"));
    let failing: Vec<&Value> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .collect();
    assert!(!failing.is_empty());
    for check in failing {
        let hash = check["inputs_hash"].as_str().expect("failures carry a hash");
        assert_eq!(hash.len(), 16);
    }
}

#[test]
fn matching_class_check_passes() {
    let dir = work_dir("matching-class");
    run(
        &["sample", "--class", "CII", "--n", "4", "--seed", "3", "--out", "h.json"],
        &dir,
    );
    let out = run(
        &["check-hamiltonian", "--class", "CII", "--n", "4", "--in", "h.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "stdout: {}", stdout_of(&out));
}

#[test]
fn sample_output_files_are_deterministic() {
    let dir = work_dir("sample-determinism");
    run(
        &["sample", "--class", "CI", "--n", "4", "--seed", "9", "--out", "a.json"],
        &dir,
    );
    run(
        &["sample", "--class", "CI", "--n", "4", "--seed", "9", "--out", "b.json"],
        &dir,
    );
    assert_eq!(
        fs::read(dir.join("a.json")).unwrap(),
        fs::read(dir.join("b.json")).unwrap()
    );
}

#[test]
fn env_seed_matches_explicit_seed() {
    let dir = work_dir("env-seed");
    let with_env = bin()
        .args(["sample", "--class", "CI", "--n", "4", "--out", "e.json"])
        .current_dir(&dir)
        .env("TENFOLD_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(with_env.status.code(), Some(0));
    run(
        &["sample", "--class", "CI", "--n", "4", "--seed", "9", "--out", "s.json"],
        &dir,
    );
    assert_eq!(
        fs::read(dir.join("e.json")).unwrap(),
        fs::read(dir.join("s.json")).unwrap()
    );
}

#[test]
fn json_reports_are_deterministic_modulo_timing() {
    let dir = work_dir("report-determinism");
    let args = [
        "decompose", "--n", "2", "--in", "u.json", "--seed", "5", "--json", "r.json",
    ];
    let minus_one = CMat::from_fn(4, 4, |i, j| {
        if i == j {
            Complex64::new(-1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    write_matrix(&dir, "u.json", &minus_one, None);
    run(&args, &dir);
    let first = fs::read(dir.join("r.json")).unwrap();
    run(&args, &dir);
    let second = fs::read(dir.join("r.json")).unwrap();
    assert_eq!(strip_timing(&first), strip_timing(&second));
}

#[test]
fn decompose_example_midpoint_hits_cut_locus() {
    let dir = work_dir("cut-locus");
    let minus_one = CMat::from_fn(4, 4, |i, j| {
        if i == j {
            Complex64::new(-1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    write_matrix(&dir, "u.json", &minus_one, None);
    let out = run(
        &["decompose", "--n", "2", "--in", "u.json", "--json", "r.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "status is data, not failure");
    let report = report_json(&dir.join("r.json"));
    assert_eq!(result_value(&report, "status"), "cut_locus");
    let minimizers = result_value(&report, "minimizers").as_u64().unwrap();
    assert!(minimizers >= 2, "found {minimizers} minimizers");
    let gap = result_value(&report, "distance_gap").as_f64().unwrap();
    assert!(gap <= 1e-6, "gap {gap}");
}

#[test]
fn decompose_parity_operator_is_weak_at_distance_zero() {
    let dir = work_dir("parity-weak");
    let parity = CMat::from_fn(4, 4, |i, j| {
        if i == j {
            let sign = if i == 1 || i == 2 { -1.0 } else { 1.0 };
            Complex64::new(sign, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    write_matrix(&dir, "p.json", &parity, None);
    let out = run(
        &["decompose", "--n", "2", "--in", "p.json", "--json", "r.json"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "stdout: {}", stdout_of(&out));
    let report = report_json(&dir.join("r.json"));
    assert_eq!(result_value(&report, "status"), "weak");
    let distance = result_value(&report, "distance").as_f64().unwrap();
    assert!(distance <= 1e-6, "distance {distance}");
}

#[test]
fn suspend_chiral_source_lands_in_target() {
    let dir = work_dir("suspend");
    run(
        &["sample", "--class", "AIII", "--n", "2", "--seed", "2", "--out", "h.json"],
        &dir,
    );
    let out = run(
        &[
            "suspend", "--spectrum", "ku", "--level", "0", "--theta", "0.25",
            "--in", "h.json", "--out", "s.json",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "stdout: {}", stdout_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("target = A(N=2) (level 1)"), "stdout: {text}");
    assert!(dir.join("s.json").exists());
}

#[test]
fn suspend_rejects_theta_outside_circle() {
    let dir = work_dir("suspend-theta");
    run(
        &["sample", "--class", "AIII", "--n", "2", "--seed", "2", "--out", "h.json"],
        &dir,
    );
    let out = run(
        &[
            "suspend", "--spectrum", "ku", "--level", "0", "--theta", "1.5",
            "--in", "h.json",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn normalize_rotated_time_reversal_recovers_canonical_block() {
    let dir = work_dir("normalize");
    // A generic unitary change of basis: rotation times phases.
    let (c, s) = (0.6, 0.8);
    let phase_a = Complex64::from_polar(1.0, 0.31);
    let phase_b = Complex64::from_polar(1.0, -0.47);
    let r = CMat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => phase_a * c,
        (0, 1) => phase_a * s,
        (1, 0) => -phase_b * s,
        (1, 1) => phase_b * c,
        _ => unreachable!(),
    });
    // Time-reversal blocks transform with the transpose, not the adjoint.
    let rotated = &r * j2() * r.transpose();
    write_matrix(&dir, "t.json", &rotated, Some("time_reversal"));
    let out = run(
        &["normalize", "--sym", "t.json", "--out", "norm"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(0), "stdout: {}", stdout_of(&out));

    let written: Value =
        serde_json::from_str(&fs::read_to_string(dir.join("norm/t.json")).unwrap()).unwrap();
    let expect = j2();
    let data = written["data"].as_array().unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let pair = data[2 * i + j].as_array().unwrap();
            let got = Complex64::new(pair[0].as_f64().unwrap(), pair[1].as_f64().unwrap());
            assert!(
                (got - expect[(i, j)]).norm() <= 1e-8,
                "entry ({i},{j}): {got}"
            );
        }
    }
    assert!(dir.join("norm/basis.json").exists());
}

#[test]
fn verify_car_suite_passes() {
    let dir = work_dir("verify-car");
    let out = run(&["verify", "--suite", "car", "--n-max", "3"], &dir);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("car[n=3]"), "stdout: {text}");
    assert!(text.contains("status: PASS"), "stdout: {text}");
}

#[test]
fn loosened_tolerance_flips_a_failing_check() {
    let dir = work_dir("tol-override");
    run(
        &["sample", "--class", "AII", "--n", "4", "--seed", "7", "--out", "h.json"],
        &dir,
    );
    let strict = run(
        &["check-hamiltonian", "--class", "D", "--n", "4", "--in", "h.json"],
        &dir,
    );
    assert_eq!(strict.status.code(), Some(1));
    let loose = run(
        &[
            "check-hamiltonian", "--class", "D", "--n", "4", "--in", "h.json",
            "--tol", "100.0",
        ],
        &dir,
    );
    assert_eq!(loose.status.code(), Some(0));
}
