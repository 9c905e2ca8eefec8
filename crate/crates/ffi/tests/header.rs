use std::path::{Path, PathBuf};
use std::process::Command;

fn cc() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".to_string());
    Command::new(&cc)
        .arg("--version")
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|_| cc)
}

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

const PROGRAM: &str = r#"
#include <stdio.h>
#include <stdlib.h>
#include "vesicle.h"

int main(void) {
    const char *cfg = "grid.m = 8\ngrid.n = 8\nmodel.epsilon = 0.1\ntime.dt = 1e-6\ntime.steps = 2\ninit.kind = ellipse\ninit.radius = 0.3\n";
    VesicleSim *sim = NULL;
    if (vesicle_sim_new(cfg, &sim) != VESICLE_STATUS_OK) return 1;
    size_t iters = 0;
    if (vesicle_sim_run(sim) != VESICLE_STATUS_OK) return 2;
    if (vesicle_sim_step(sim, 1, &iters) != VESICLE_STATUS_OK || iters == 0) return 3;
    double phi[64];
    if (vesicle_sim_copy_field(sim, VESICLE_FIELD_PHI, phi, 63) != VESICLE_STATUS_BUFFER_TOO_SMALL) return 4;
    if (vesicle_sim_copy_field(sim, VESICLE_FIELD_PHI, phi, 64) != VESICLE_STATUS_OK) return 5;
    VesicleDiagnostics d;
    if (vesicle_sim_diagnostics(sim, &d) != VESICLE_STATUS_OK) return 6;
    vesicle_sim_free(sim);
    if (vesicle_sim_new(NULL, &sim) != VESICLE_STATUS_NULL_POINTER) return 7;
    char msg[128];
    if (vesicle_last_error_message(msg, sizeof msg) == 0) return 8;
    printf("%s %.6f %.6f\n", vesicle_version(), phi[27], d.total_mass);
    return 0;
}
"#;

#[test]
fn header_drives_the_static_library_from_c() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = target_dir().join("libvesicle_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with(env!("CARGO_PKG_VERSION")));
}
