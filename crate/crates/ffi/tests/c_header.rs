//! Compiles tests/smoke.c against the generated header and the static
//! library. Skipped when no C compiler or static archive is available.

use std::path::{Path, PathBuf};
use std::process::Command;

fn staticlib() -> Option<PathBuf> {
    // target/<profile>/deps/<test-binary>
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libcoverless_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_round_trips() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let Some(lib) = staticlib() else {
        eprintln!("skipped: libcoverless_ffi.a not found");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipped: no cc");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.starts_with("ok "), "{stdout}");
}
