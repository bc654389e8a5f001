//! Compiles and runs a C program against the generated header and the
//! static library, when a C compiler is available.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "glove.h"

int main(void) {
    GloveHandModel *model = NULL;
    if (glove_hand_model_new(NULL, &model) != GLOVE_STATUS_OK) return 1;
    if (glove_hand_model_dof(model) != 21) return 2;
    glove_hand_model_free(model);

    GloveDecoder *dec = NULL;
    if (glove_decoder_new(NULL, &dec) != GLOVE_STATUS_OK) return 3;
    glove_decoder_set_joint(dec, 0, 0.0, 0.0, 1.0);
    double theta = 0.0;
    if (glove_decoder_decode(dec, 0, 0.0, 1.0, &theta) != GLOVE_STATUS_OK) return 4;
    if (theta < 1.5707 || theta > 1.5709) return 5;
    if (glove_decoder_decode(dec, 0, 0.0, 0.0, &theta) != GLOVE_STATUS_DECODE) return 6;
    if (strlen(glove_last_error()) == 0) return 7;
    glove_decoder_free(dec);
    printf("ok\n");
    return 0;
}
"#;

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc).arg("--version").output().ok()?;
    Some(cc)
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libglove_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile_dir();
    let src = dir.join("client.c");
    let bin = dir.join("client");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("glove-ffi-client-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
