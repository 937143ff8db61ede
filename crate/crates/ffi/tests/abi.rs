use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use kinetic_bte_ffi::*;

const SMALL: &str = r#"
seed = 4
[potential]
kind = "harmonic"
[kernel]
polar_nodes = 1
azimuth_nodes = 4
[grid]
spatial_points = 4
velocity_cutoff = 4.0
velocity_points = 8
[initial]
kind = "random"
[scheme]
dt = 0.01
t_end = 0.02
"#;

fn last_error() -> String {
    let p = kbte_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario(text: &str) -> *mut KbteScenario {
    let text = CString::new(text).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { kbte_scenario_parse(text.as_ptr(), &mut s) },
        KbteStatus::Ok
    );
    s
}

#[test]
fn domain_potential_and_exit() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(kbte_domain_ball(2.0, &mut d), KbteStatus::Ok);
        let mut level = 0.0;
        assert_eq!(
            kbte_domain_level(d, [2.0, 0.0, 0.0].as_ptr(), &mut level),
            KbteStatus::Ok
        );
        assert!(level.abs() < 1e-12);
        let mut p = ptr::null_mut();
        assert_eq!(kbte_potential_harmonic(1.0, d, &mut p), KbteStatus::Ok);
        let mut phi = 0.0;
        assert_eq!(
            kbte_potential_phi(p, [1.0, 0.0, 0.0].as_ptr(), &mut phi),
            KbteStatus::Ok
        );
        let mut zero = ptr::null_mut();
        assert_eq!(kbte_potential_zero(&mut zero), KbteStatus::Ok);
        let (mut tb, mut xb, mut vb) = (0.0, [0.0; 3], [0.0; 3]);
        let st = kbte_backward_exit(
            d,
            zero,
            [0.0; 3].as_ptr(),
            [0.0, 2.0, 0.0].as_ptr(),
            &mut tb,
            xb.as_mut_ptr(),
            vb.as_mut_ptr(),
        );
        assert_eq!(st, KbteStatus::Ok);
        assert!((tb - 1.0).abs() < 1e-12);
        assert!((xb[1] + 2.0).abs() < 1e-9);
        assert_eq!(vb, [0.0, 2.0, 0.0]);
        kbte_potential_free(zero);
        kbte_potential_free(p);
        kbte_domain_free(d);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(kbte_domain_ball(-1.0, &mut d), KbteStatus::Validation);
        assert!(d.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            kbte_domain_ball(1.0, ptr::null_mut()),
            KbteStatus::NullPointer
        );
        assert_eq!(
            kbte_domain_ellipsoid(ptr::null(), &mut d),
            KbteStatus::NullPointer
        );
        let mut s = ptr::null_mut();
        let bad = CString::new("[weight]\nbeta = 4.0\n").unwrap();
        assert_eq!(
            kbte_scenario_parse(bad.as_ptr(), &mut s),
            KbteStatus::Validation
        );
        assert!(last_error().contains("beta"));
        let typo = CString::new("sed = 1\n").unwrap();
        assert_eq!(
            kbte_scenario_parse(typo.as_ptr(), &mut s),
            KbteStatus::Validation
        );
        let missing = CString::new("/nonexistent/scenario.toml").unwrap();
        assert_eq!(kbte_scenario_load(missing.as_ptr(), &mut s), KbteStatus::Io);
        kbte_domain_free(ptr::null_mut());
        kbte_scenario_free(ptr::null_mut());
    }
}

#[test]
fn constants_and_moments() {
    let mut m = 0.0;
    assert_eq!(
        unsafe { kbte_gaussian_moment([0, 0, 0].as_ptr(), 0, &mut m) },
        KbteStatus::Ok
    );
    assert!((m - (2.0 * std::f64::consts::PI).powf(1.5)).abs() < 1e-12);
    assert_eq!(kbte_beta_c(), 5.0);
    assert!(kbte_constant_a() > 0.0);
    let v = unsafe { CStr::from_ptr(kbte_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn scenario_hash_and_simulation_series() {
    unsafe {
        let s = scenario(SMALL);
        let mut needed = 0usize;
        assert_eq!(
            kbte_scenario_hash(s, ptr::null_mut(), 0, &mut needed),
            KbteStatus::BufferTooSmall
        );
        assert_eq!(needed, 17);
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(
            kbte_scenario_hash(s, buf.as_mut_ptr(), buf.len(), ptr::null_mut()),
            KbteStatus::Ok
        );
        let hash = CStr::from_ptr(buf.as_ptr()).to_str().unwrap().to_owned();
        assert_eq!(hash.len(), 16);

        let mut series = ptr::null_mut();
        assert_eq!(kbte_simulate(s, &mut series), KbteStatus::Ok);
        let n = kbte_series_len(series);
        assert_eq!(n, 3);
        assert_eq!(kbte_series_channel_count(series), 7);
        let mut name = vec![0 as std::ffi::c_char; 32];
        assert_eq!(
            kbte_series_channel_name(series, 0, name.as_mut_ptr(), 32, ptr::null_mut()),
            KbteStatus::Ok
        );
        assert_eq!(CStr::from_ptr(name.as_ptr()).to_str().unwrap(), "mass");
        assert_eq!(
            kbte_series_channel_name(series, 99, name.as_mut_ptr(), 32, ptr::null_mut()),
            KbteStatus::OutOfRange
        );
        let mut t = vec![0.0; n];
        assert_eq!(kbte_series_times(series, t.as_mut_ptr(), n), KbteStatus::Ok);
        assert_eq!(t[0], 0.0);
        let mut mass = vec![0.0; n];
        let ch = CString::new("mass").unwrap();
        assert_eq!(
            kbte_series_channel(series, ch.as_ptr(), mass.as_mut_ptr(), n),
            KbteStatus::Ok
        );
        assert!(((mass[2] - mass[0]) / mass[0]).abs() < 1e-10);
        assert_eq!(
            kbte_series_channel(series, ch.as_ptr(), mass.as_mut_ptr(), 1),
            KbteStatus::BufferTooSmall
        );
        kbte_series_free(series);

        assert_eq!(kbte_scenario_set_seed(s, 5), KbteStatus::Ok);
        let mut other = vec![0 as std::ffi::c_char; 17];
        kbte_scenario_hash(s, other.as_mut_ptr(), 17, ptr::null_mut());
        assert_ne!(CStr::from_ptr(other.as_ptr()).to_str().unwrap(), hash);
        kbte_scenario_free(s);
    }
}

#[test]
fn scenario_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    unsafe {
        let s = scenario(SMALL);
        assert_eq!(
            kbte_scenario_run(s, KbteCommand::Simulate, out.as_ptr()),
            KbteStatus::Ok
        );
        assert_eq!(
            kbte_scenario_run(s, KbteCommand::Picard, out.as_ptr()),
            KbteStatus::Validation
        );
        kbte_scenario_free(s);
    }
    let csv = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("# config_hash="));
    assert!(dir.path().join("simulate.json").exists());
}

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = root.join("include").join("kinetic_bte.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "kbte_domain_ball",
        "kbte_scenario_run",
        "kbte_series_channel",
        "KbteStatus",
        "typedef struct KbteDomain KbteDomain",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
    // integration tests link the rlib only; build the static library
    let built = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "-p", "kinetic-bte-ffi", "--lib"])
        .current_dir(root)
        .status()
        .expect("cargo available");
    assert!(built.success());
    let lib = target_dir().join("libkinetic_bte_ffi.a");
    assert!(
        lib.exists(),
        "static library not built at {}",
        lib.display()
    );
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let line = String::from_utf8_lossy(&out.stdout);
    assert!(line.trim().ends_with("5.0"), "{line}");
}
