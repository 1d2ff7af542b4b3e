use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use trapspec_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { trapspec_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned();
    assert_eq!(n, s.len());
    s
}

fn sample(alpha: f64, n: usize, seed: u64) -> *mut TrapspecLandscape {
    let mut l = ptr::null_mut();
    assert_eq!(unsafe { trapspec_landscape_sample(alpha, n, seed, &mut l) }, TrapspecStatus::Ok);
    l
}

#[test]
fn sampled_landscape_matches_library() {
    let l = sample(0.5, 50, 9);
    let n = unsafe { trapspec_landscape_len(l) };
    assert_eq!(n, 50);
    let mut rates = vec![0.0; n];
    assert_eq!(unsafe { trapspec_landscape_rates(l, rates.as_mut_ptr(), n) }, TrapspecStatus::Ok);
    let direct = trapspec::landscape::sample_landscape(&trapspec::LandscapeConfig::new(0.5, 50, 9)).unwrap();
    assert_eq!(rates, direct.rates());
    unsafe { trapspec_landscape_free(l) };
}

#[test]
fn spectrum_and_correlation_round_trip() {
    let l = sample(0.5, 30, 2);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { trapspec_spectrum_compute(l, 1e-14, &mut s) }, TrapspecStatus::Ok);
    let n = unsafe { trapspec_spectrum_len(s) };
    let mut eig = vec![0.0; n];
    let mut w = vec![0.0; n];
    assert_eq!(unsafe { trapspec_spectrum_eigenvalues(s, eig.as_mut_ptr(), n) }, TrapspecStatus::Ok);
    assert_eq!(unsafe { trapspec_spectrum_weights(s, w.as_mut_ptr(), n) }, TrapspecStatus::Ok);
    assert!(eig.windows(2).all(|p| p[0] < p[1]));
    assert!(w.iter().all(|v| *v > 0.0));

    let mut pi = 0.0;
    assert_eq!(unsafe { trapspec_pi(s, 5.0, 5.0, &mut pi) }, TrapspecStatus::Ok);
    let (mut est, mut se) = (0.0, 0.0);
    let st = unsafe { trapspec_pi_monte_carlo(l, 5.0, 5.0, 20_000, 4, &mut est, &mut se) };
    assert_eq!(st, TrapspecStatus::Ok);
    assert!((est - pi).abs() < 5.0 * se + 1e-3, "{est} ± {se} vs {pi}");
    unsafe {
        trapspec_spectrum_free(s);
        trapspec_landscape_free(l);
    }
}

#[test]
fn aging_function_anchor() {
    let mut v = 0.0;
    assert_eq!(unsafe { trapspec_aging_function(0.5, 1.0, &mut v) }, TrapspecStatus::Ok);
    assert!((v - 0.5).abs() < 1e-12);
}

#[test]
fn errors_are_reported_per_thread() {
    let mut l = ptr::null_mut();
    assert_eq!(unsafe { trapspec_landscape_sample(1.5, 10, 0, &mut l) }, TrapspecStatus::InvalidArgument);
    assert!(l.is_null());
    assert!(last_error().contains("alpha"), "{}", last_error());
    let other = std::thread::spawn(|| unsafe { trapspec_last_error_message(ptr::null_mut(), 0) }).join().unwrap();
    assert_eq!(other, 0);

    let mut v = 0.0;
    assert_eq!(unsafe { trapspec_aging_function(0.5, 1.0, &mut v) }, TrapspecStatus::Ok);
    assert_eq!(last_error(), "");
}

#[test]
fn null_pointers_and_short_buffers() {
    assert_eq!(unsafe { trapspec_landscape_sample(0.5, 10, 0, ptr::null_mut()) }, TrapspecStatus::NullPointer);
    assert_eq!(unsafe { trapspec_landscape_from_rates(ptr::null(), 3, &mut ptr::null_mut()) }, TrapspecStatus::NullPointer);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { trapspec_spectrum_compute(ptr::null(), 1e-12, &mut s) }, TrapspecStatus::NullPointer);
    assert_eq!(unsafe { trapspec_landscape_len(ptr::null()) }, 0);
    unsafe {
        trapspec_landscape_free(ptr::null_mut());
        trapspec_spectrum_free(ptr::null_mut());
    }

    let rates = [0.3, 0.1, 0.7];
    let mut l = ptr::null_mut();
    assert_eq!(unsafe { trapspec_landscape_from_rates(rates.as_ptr(), 3, &mut l) }, TrapspecStatus::Ok);
    let mut buf = [0.0; 2];
    assert_eq!(unsafe { trapspec_landscape_rates(l, buf.as_mut_ptr(), 2) }, TrapspecStatus::BufferTooSmall);
    let mut full = [0.0; 3];
    assert_eq!(unsafe { trapspec_landscape_rates(l, full.as_mut_ptr(), 3) }, TrapspecStatus::Ok);
    assert_eq!(full, [0.1, 0.3, 0.7]);
    unsafe { trapspec_landscape_free(l) };
}

#[test]
fn truncated_error_message_is_terminated() {
    let mut l = ptr::null_mut();
    unsafe { trapspec_landscape_sample(-1.0, 10, 0, &mut l) };
    let mut small = [1 as std::ffi::c_char; 5];
    let full = unsafe { trapspec_last_error_message(small.as_mut_ptr(), small.len()) };
    assert!(full > 4);
    assert_eq!(small[4], 0);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(trapspec_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_the_interface() {
    let header = std::fs::read_to_string(crate_dir().join("include/trapspec.h")).unwrap();
    for name in [
        "typedef struct TrapspecLandscape TrapspecLandscape;",
        "typedef struct TrapspecSpectrum TrapspecSpectrum;",
        "TRAPSPEC_STATUS_BUFFER_TOO_SMALL = 4",
        "trapspec_landscape_sample(",
        "trapspec_spectrum_compute(",
        "trapspec_pi_monte_carlo(",
        "trapspec_last_error_message(",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

fn static_library() -> Option<PathBuf> {
    // tests run from <target>/<profile>/deps
    let profile_dir = std::env::current_exe().ok()?.parent()?.parent()?.to_path_buf();
    let lib = profile_dir.join("libtrapspec_ffi.a");
    lib.is_file().then_some(lib)
}

fn have_compiler() -> bool {
    Command::new("cc").arg("--version").output().map(|o| o.status.success()).unwrap_or(false)
}

#[test]
fn c_program_links_and_runs() {
    let (Some(lib), true) = (static_library(), have_compiler()) else {
        eprintln!("skipping: no C compiler or static library");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let src = crate_dir().join("tests/c/smoke.c");
    let include = crate_dir().join("include");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg(format!("-I{}", include.display()))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(Path::new(&exe)).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
