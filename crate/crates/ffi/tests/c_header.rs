use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "phasenoise.h"

int main(void) {
    PnChannel *ch = NULL;
    if (pn_channel_new(0.01, 10.0, 2, 16, "square", "qpsk", &ch) != PN_STATUS_OK) return 1;
    PnRate r;
    if (pn_estimate_rate(ch, PN_MODEL_MULTISAMPLE_TRUE, 8, 200, 1, 1, &r) != PN_STATUS_OK) return 2;
    pn_channel_free(ch);
    double v;
    if (pn_phase_lb(10.0, 0.1, 0.1, PN_ALPHA_SNR_DELTA, &v) != PN_STATUS_DOMAIN) return 3;
    char msg[128];
    if (pn_last_error_message(msg, sizeof msg) == 0) return 4;
    printf("%.6f\n", r.rate_bits);
    return 0;
}
"#;

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

fn profile_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_declares_the_api() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/phasenoise.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "pn_channel_new",
        "pn_channel_free",
        "pn_estimate_rate",
        "pn_simulate",
        "pn_observation_copy",
        "pn_observation_free",
        "pn_moments",
        "pn_amplitude_lb",
        "pn_phase_lb",
        "pn_last_error_message",
        "typedef struct PnChannel PnChannel",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
}

#[test]
fn c_program_links_and_runs() {
    if !have_cc() {
        eprintln!("cc not found, skipping");
        return;
    }
    let lib = profile_dir().join("libphasenoise_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    let bin = dir.path().join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let rate: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(rate > 0.0 && rate < 2.1);
}
