//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "crowdcode.h"

int main(void) {
    uint64_t cols[10] = {5, 12, 3, 10, 12, 9, 9, 10, 9, 12};
    CcCodeMatrix *a = NULL;
    if (cc_code_matrix_from_columns(cols, 10, 4, &a) != CC_STATUS_OK) return 10;
    double pe = -1.0;
    if (cc_pe_iid_coding(a, 1.0, &pe) != CC_STATUS_OK || pe != 0.0) return 11;
    if (cc_pe_iid_coding(a, 0.25, &pe) != CC_STATUS_OK || fabs(pe - 0.75) > 1e-12) return 12;
    if (cc_pe_iid_coding(NULL, 0.5, &pe) != CC_STATUS_NULL_POINTER) return 13;
    if (cc_last_error() == NULL) return 14;
    char *json = NULL;
    if (cc_code_matrix_to_json(a, &json) != CC_STATUS_OK) return 15;
    printf("%s\n", json);
    cc_string_free(json);
    cc_code_matrix_free(a);
    return 0;
}
"#;

fn find_compiler() -> Option<String> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
        .map(str::to_string)
}

#[test]
fn header_compiles_and_links() {
    let Some(compiler) = find_compiler() else {
        eprintln!("no C compiler on PATH; skipping");
        return;
    };
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(header_dir.join("crowdcode.h").exists(), "header not generated");

    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libcrowdcode_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let bin = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(&compiler)
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");

    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"columns\":[5,12,3,10,12,9,9,10,9,12]"), "{text}");
}
