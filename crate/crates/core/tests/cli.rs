use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qwalk(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn small_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("lab.cfg");
    fs::write(
        &path,
        format!(
            "# small fiber\nn_in_h = 20\nn_in_v = 22\nn_out = 36\nmatrix_f1 = 2, 7\nmatrix_f2 = 20, 30\ntarget_x = 8\ntarget_y = 27\n{extra}"
        ),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "seed = 4\n");
    let out = dir.path().join("tm");
    let o = qwalk(&["measure-tm", "--config", &cfg], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("tm_report.json")).unwrap()).unwrap();
    assert_eq!(report["n_out"], 36);
    assert_eq!(report["n_in"], 42);
    assert!(report["fidelity"].as_f64().unwrap() > 0.999);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], "4");
    let names: Vec<&str> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["tm.qwtm", "tm_report.json"]);
}

#[test]
fn seed_flag_overrides_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "seed = 4\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(qwalk(&["ttm-matrix", "--config", &cfg, "--seed", "9"], &a)
        .status
        .success());
    assert!(qwalk(&["ttm-matrix", "--config", &cfg], &b).status.success());
    let read = |d: &Path| fs::read(d.join("coincidences_near.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
    let text = String::from_utf8(read(&a)).unwrap();
    assert!(text.starts_with("input,F1_2-F2_20,F1_2-F2_30,F1_7-F2_20,F1_7-F2_30\n"));
    assert_eq!(text.lines().count(), 17);
    assert!(!text.contains('\r'));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let bad = small_config(dir.path(), "bogus_key = 1\n");
    assert_eq!(qwalk(&["focus", "--config", &bad], &out).status.code(), Some(2));
    let missing = dir.path().join("nope.cfg");
    assert_eq!(
        qwalk(&["focus", "--config", missing.to_str().unwrap()], &out)
            .status
            .code(),
        Some(2)
    );
    let overlap = small_config(dir.path(), "target_y = 9\n");
    assert_eq!(qwalk(&["focus", "--config", &overlap], &out).status.code(), Some(2));
    let steps = small_config(dir.path(), "phase_steps = 2\n");
    assert_eq!(qwalk(&["measure-tm", "--config", &steps], &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn starved_detector_is_physics_degenerate() {
    // No distinguishable counts at all leaves the contrast undefined.
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "pair_rate = 1e-9\nduration_scan_s = 1e-3\n");
    let o = qwalk(
        &["phase-grid", "--config", &cfg, "--noise", "poisson"],
        &dir.path().join("o"),
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("o");
    assert!(qwalk(&["hom-scan", "--config", &cfg], &out).status.success());
    assert!(qwalk(&["hom-scan", "--config", &cfg, "--verify"], &out)
        .status
        .success());
    assert_eq!(
        qwalk(&["hom-scan", "--config", &cfg, "--verify", "--seed", "2"], &out)
            .status
            .code(),
        Some(1)
    );
    fs::write(out.join("hom_0_pi.csv"), "tampered\n").unwrap();
    let o = qwalk(&["hom-scan", "--config", &cfg, "--verify"], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hom_0_pi.csv"));
    // A manifest from another command is a usage error.
    assert_eq!(
        qwalk(&["focus", "--config", &cfg, "--verify"], &out).status.code(),
        Some(2)
    );
}

#[test]
fn focus_writes_pgm_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("o");
    assert!(qwalk(&["focus", "--config", &cfg], &out).status.success());
    let pgm = fs::read(out.join("focus_a_image.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n6 6\n65535\n"));
    assert_eq!(pgm.len(), b"P5\n6 6\n65535\n".len() + 2 * 36);
    let side: serde_json::Value = serde_json::from_slice(&fs::read(out.join("focus_a_image.json")).unwrap()).unwrap();
    assert_eq!(side["maxval"], 65535);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["independent"]["enhancement"].as_f64().unwrap() > 10.0);
}
