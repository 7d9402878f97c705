//! Compiles and runs a small C program against the generated header and the
//! static library. Skipped when no C compiler is available.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "det.h"

int main(void) {
    double data[2 * 400];
    for (int i = 0; i < 400; ++i) {
        data[2 * i] = (i % 20) / 20.0;
        data[2 * i + 1] = (i / 20) / 20.0;
    }
    DetBuildConfig cfg = det_build_config_default();
    DetTree *tree = NULL;
    if (det_tree_build(data, 400, 2, &cfg, &tree) != DET_STATUS_OK) {
        fprintf(stderr, "%s\n", det_last_error());
        return 1;
    }
    size_t dims = 0;
    det_tree_dims(tree, &dims);
    double out[2 * 8];
    size_t cd[1] = {0};
    double cv[1] = {0.25};
    if (det_tree_sample_conditional(tree, cd, cv, 1, 1, 8, out, 16) != DET_STATUS_OK) return 2;
    for (int i = 0; i < 8; ++i) {
        if (out[2 * i] != 0.25) return 3;
    }
    if (det_tree_sample(tree, 1, 8, out, 4) != DET_STATUS_BUFFER_TOO_SMALL) return 4;
    det_tree_free(tree);
    printf("dims=%zu\n", dims);
    return dims == 2 ? 0 : 5;
}
"#;

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc)
        .arg("--version")
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|_| cc)
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/det.h");
    for lang in ["c", "c++"] {
        let status = Command::new(&cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(&header)
            .status()
            .unwrap();
        assert!(status.success(), "header rejected as {lang}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    let lib = target_dir().join("libdet_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built at {}; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new(&cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "link failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(
        run.status.success(),
        "exit {:?}: {}",
        run.status,
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "dims=2");
}
