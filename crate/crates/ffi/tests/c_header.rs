//! Compiles and runs a C program against the generated header and the static
//! library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include <string.h>
#include "pano_depth.h"

#define W 16
#define H 8

int main(void) {
    double gt[W * H], pred[W * H];
    for (int k = 0; k < W * H; k++) {
        gt[k] = 2.0 + 0.05 * (k % W);
        pred[k] = gt[k] + 0.25;
    }
    PdDepth *g = NULL, *p = NULL;
    if (pd_depth_new(gt, NULL, W, H, 10.0, &g) != PD_STATUS_OK) return 1;
    if (pd_depth_new(pred, NULL, W, H, 10.0, &p) != PD_STATUS_OK) return 2;
    PdDirectErrors e;
    if (pd_direct_errors(p, g, 0, &e) != PD_STATUS_OK) return 3;
    if (fabs(e.rmse - 0.25) > 1e-12) return 4;

    PdIcosphere *s = NULL;
    if (pd_icosphere_new(6, &s) != PD_STATUS_OK) return 5;
    if (pd_icosphere_vertex_count(s) != 40962) return 6;
    pd_icosphere_free(s);

    if (pd_depth_new(gt, NULL, 3, 3, 10.0, &g) != PD_STATUS_INVALID_ARGUMENT) return 7;
    char msg[256];
    if (pd_last_error_message(msg, sizeof msg) == 0 || strstr(msg, "2:1") == NULL) return 8;

    pd_depth_free(p);
    pd_depth_free(g);
    printf("ok %.3f\n", pd_indicator(0.8908, 0.3967));
    return 0;
}
"#;

fn static_lib(target_dir: &Path) -> Option<PathBuf> {
    let direct = target_dir.join("libpano_depth_ffi.a");
    if direct.exists() {
        return Some(direct);
    }
    std::fs::read_dir(target_dir.join("deps"))
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .find(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            name.starts_with("libpano_depth_ffi") && name.ends_with(".a")
        })
}

#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let target_dir = exe.parent().unwrap().parent().unwrap();
    let lib = static_lib(target_dir).expect("static library next to the test binary");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("pano_depth.h").exists());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = Command::new(&cc)
        .args(["-std=c11", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap_or_else(|e| panic!("running {cc}: {e}"));
    assert!(out.status.success(), "compile failed:\n{}", String::from_utf8_lossy(&out.stderr));

    let run = Command::new(&bin).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok 23.084\n");
}
