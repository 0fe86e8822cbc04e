//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // The test binary lives in <target>/<profile>/deps.
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn compiler() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .map(str::to_owned)
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "qwalk.h"

int main(void) {
    QwLabConfig cfg;
    if (qw_lab_config_default(&cfg) != QW_STATUS_OK) return 10;
    cfg.n_in_h = 8; cfg.n_in_v = 9; cfg.n_out = 12;
    QwLab *lab = NULL;
    if (qw_lab_new(&cfg, &lab) != QW_STATUS_OK) return 11;
    QwTm *tm = NULL;
    if (qw_tm_measure(lab, -1, 3, 1.0, &tm) != QW_STATUS_OK) return 12;
    QwTm *truth = NULL;
    if (qw_tm_oracle(lab, &truth) != QW_STATUS_OK) return 13;
    double f = 0.0;
    if (qw_tm_fidelity(tm, truth, &f) != QW_STATUS_OK || f < 0.999999) return 14;
    double mask[8];
    if (qw_focus(tm, 4, QW_HALF_H, mask, 8) != QW_STATUS_OK) return 15;
    if (qw_lab_set_slm(lab, QW_HALF_H, mask, 8) != QW_STATUS_OK) return 16;
    if (qw_lab_set_input_mode(lab, QW_HALF_V, 99) != QW_STATUS_RANGE) return 17;
    const char *err = qw_last_error();
    if (err == NULL || strlen(err) == 0) return 18;
    if (qw_lab_dims(NULL, NULL, NULL, NULL) != QW_STATUS_NULL_POINTER) return 19;
    printf("ok %s %.6f\n", qw_version(), f);
    qw_tm_free(truth);
    qw_tm_free(tm);
    qw_lab_free(lab);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let lib = target_dir().join("libqwalk_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let exe = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qwalk.h")).unwrap();
    for name in [
        "qw_lab_new",
        "qw_lab_free",
        "qw_tm_measure",
        "qw_tm_save",
        "qw_tm_load",
        "qw_superposition",
        "qw_last_error",
        "QW_STATUS_DEGENERATE",
        "typedef struct QwLab QwLab",
        "typedef struct QwTm QwTm",
    ] {
        assert!(header.contains(name), "{name} missing");
    }
}
