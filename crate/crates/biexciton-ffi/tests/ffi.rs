use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use biexciton_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = unsafe { bx_last_error_message(buf.as_mut_ptr().cast(), buf.len()) };
    assert!(n > 0);
    CStr::from_bytes_until_nul(&buf).unwrap().to_string_lossy().into_owned()
}

const FIG2: BxModelParams = BxModelParams { n: 40, j: 1.0, d: 4.1, e0: 1000.0, v0: 4.0 };

#[test]
fn exciton_bound_energy() {
    let p = BxModelParams { n: 200, j: -1.0, d: 4.0, e0: 0.0, v0: -2.5 };
    let mut e = 0.0;
    assert_eq!(unsafe { bx_exciton_bound_energy(&p, &mut e) }, BxStatus::Ok);
    assert!((e + 3.2016).abs() < 1e-3);

    let free = BxModelParams { v0: 0.0, ..p };
    assert_eq!(unsafe { bx_exciton_bound_energy(&free, &mut e) }, BxStatus::Existence);
}

#[test]
fn projected_handle_lifecycle() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bx_projected_new(&FIG2, &mut h) }, BxStatus::Ok);
    assert!(!h.is_null());
    assert_eq!(unsafe { bx_projected_len(h) }, 40);
    let mut vals = vec![0.0; 40];
    assert_eq!(unsafe { bx_projected_eigenvalues(h, vals.as_mut_ptr(), 39) }, BxStatus::BufferTooSmall);
    assert!(last_error().contains("need 40"));
    assert_eq!(unsafe { bx_projected_eigenvalues(h, vals.as_mut_ptr(), 40) }, BxStatus::Ok);
    assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    let mut count = 0;
    assert_eq!(unsafe { bx_projected_bound_count(h, &mut count) }, BxStatus::Ok);
    assert_eq!(count, 4);
    unsafe { bx_projected_free(h) };
    unsafe { bx_projected_free(ptr::null_mut()) };
}

#[test]
fn errors_map_to_codes() {
    let bad_n = BxModelParams { n: 7, ..FIG2 };
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bx_projected_new(&bad_n, &mut h) }, BxStatus::Parameter);
    assert!(h.is_null());
    assert!(last_error().contains("even"));

    let edge = BxModelParams { d: 2.0, ..FIG2 };
    let mut pole = BxPole::default();
    assert_eq!(unsafe { bx_find_pole(&edge, &mut pole) }, BxStatus::Regime);
    assert_eq!(unsafe { bx_find_pole(ptr::null(), &mut pole) }, BxStatus::NullPointer);
    assert_eq!(unsafe { bx_find_pole(&FIG2, ptr::null_mut()) }, BxStatus::NullPointer);
    assert_eq!(unsafe { bx_projected_len(ptr::null()) }, 0);
}

#[test]
fn pole_and_bic() {
    let p = BxModelParams { n: 40, j: 1.0, d: 4.0, e0: 0.0, v0: 0.25 };
    let mut pole = BxPole::default();
    assert_eq!(unsafe { bx_find_pole(&p, &mut pole) }, BxStatus::Ok);
    assert_eq!(pole.k_prime, 0.0);
    assert!((pole.energy - 5.065).abs() < 1e-3 && pole.residual <= 1e-10);

    let s = BxModelParams { n: 40, j: 1.0, d: 4.1, e0: 0.0, v0: 8.0 };
    let mut bic = BxBic::default();
    assert_eq!(unsafe { bx_find_bic(&s, &mut bic) }, BxStatus::Ok);
    assert!(bic.discrepancy < 1e-2 && bic.schmidt_number < 1.1);
}

#[test]
fn wavepacket_handle() {
    let p = BxModelParams { n: 40, j: -1.0, d: -4.5, e0: 0.0, v0: 0.0 };
    let c = bx_wavepacket_config_canonical();
    assert!(c.r_offset.is_nan());
    let mut v0 = 0.0;
    assert_eq!(unsafe { bx_calibrate_v0(&p, &c, 0.5, 25.0, &mut v0) }, BxStatus::Ok);
    let p = BxModelParams { v0, ..p };
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bx_wavepacket_new(&p, &c, &mut h) }, BxStatus::Ok);
    let (mut s, mut e0, mut e1, mut r, mut t) = (0.0, 0.0, 0.0, 0.0, 0.0);
    assert_eq!(unsafe { bx_wavepacket_entropy(h, -30.0, &mut s) }, BxStatus::Ok);
    assert!(s > 0.0 && s < 1.0);
    assert_eq!(unsafe { bx_wavepacket_energy(h, -30.0, &mut e0) }, BxStatus::Ok);
    assert_eq!(unsafe { bx_wavepacket_energy(h, 70.0, &mut e1) }, BxStatus::Ok);
    assert!((e0 - e1).abs() < 1e-10);
    assert_eq!(unsafe { bx_wavepacket_split(h, 25.0, &mut r, &mut t) }, BxStatus::Ok);
    assert!((r - 0.5).abs() < 0.02 && (r + t - 1.0).abs() < 0.05);
    unsafe { bx_wavepacket_free(h) };

    let weak = BxModelParams { d: -3.0, ..p };
    assert_eq!(unsafe { bx_wavepacket_new(&weak, &c, &mut h) }, BxStatus::Regime);
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(bx_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header().join("biexciton.h")).unwrap();
    for name in [
        "typedef struct BxProjected BxProjected;",
        "BX_STATUS_REGIME = 6",
        "bx_last_error_message",
        "bx_projected_new",
        "bx_wavepacket_split",
        "bx_find_bic",
    ] {
        assert!(h.contains(name), "{name}");
    }
}

/// Compiles the C smoke program against the static library, when a C
/// compiler and the archive are available.
#[test]
fn c_program_links_and_runs() {
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let profile_dir = tmp.parent().unwrap().join(if cfg!(debug_assertions) { "debug" } else { "release" });
    let lib = profile_dir.join("libbiexciton_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let exe = tmp.join("bx_smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header())
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let out = Command::new(&exe).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
