use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use stackmorse_ffi::*;

const SPHERE: &str = r#"
name = "sphere"
ambient_dim = 3
constraints = ["x1^2+x2^2+x3^2-1"]
function = "x3"
tasks = ["analyze", "flow", "complex", "inequalities"]
[references]
poincare = [1, 0, 1]
"#;

fn last_error() -> Option<String> {
    let p = stackmorse_last_error();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn scenario(text: &str) -> *mut StackmorseScenario {
    let c = CString::new(text).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { stackmorse_scenario_from_toml(c.as_ptr(), &mut s) }, StackmorseStatus::Ok);
    assert!(last_error().is_none());
    s
}

fn run(s: *const StackmorseScenario, tasks: u32) -> *mut StackmorseReport {
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { stackmorse_run(s, tasks, false, 0, &mut r) }, StackmorseStatus::Ok);
    r
}

#[test]
fn sphere_round_trip() {
    let s = scenario(SPHERE);
    let r = run(s, 0);
    unsafe {
        assert!(stackmorse_report_passed(r));
        assert_eq!(stackmorse_report_orbit_count(r), 2);
        let mut o = StackmorseOrbit::default();
        assert_eq!(stackmorse_report_orbit(r, 1, &mut o), StackmorseStatus::Ok);
        assert_eq!((o.index, o.orbit_size, o.isotropy_order), (2, 1, 1));
        assert!((o.value - 1.0).abs() < 1e-8 && o.orientable && o.nondegenerate);

        assert_eq!(stackmorse_report_morse_polynomial(r, ptr::null_mut(), 0), 3);
        let mut poly = [0i64; 3];
        assert_eq!(stackmorse_report_morse_polynomial(r, poly.as_mut_ptr(), 3), 3);
        assert_eq!(poly, [1, 0, 1]);
        let mut total = [9u64; 2];
        assert_eq!(stackmorse_report_total_cohomology(r, total.as_mut_ptr(), 2), 3);
        assert_eq!(total, [1, 0]);

        let json = stackmorse_report_render(r, StackmorseFormat::Json);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        stackmorse_string_free(json);
        assert!(text.contains("\"morse_polynomial\": [1,0,1]"));
        stackmorse_report_free(r);
        stackmorse_scenario_free(s);
    }
}

#[test]
fn task_mask_limits_the_run() {
    let s = scenario(SPHERE);
    let r = run(s, STACKMORSE_TASK_ANALYZE);
    unsafe {
        assert_eq!(stackmorse_report_orbit_count(r), 2);
        assert_eq!(stackmorse_report_total_cohomology(r, ptr::null_mut(), 0), -1);
        stackmorse_report_free(r);
        let mut out = ptr::null_mut();
        assert_eq!(stackmorse_run(s, 1 << 9, false, 0, &mut out), StackmorseStatus::OutOfRange);
        assert!(out.is_null());
        assert!(last_error().unwrap().contains("task bits"));
        stackmorse_scenario_free(s);
    }
}

#[test]
fn error_codes_and_messages() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(stackmorse_scenario_from_toml(ptr::null(), &mut s), StackmorseStatus::NullArgument);
        let bad = CString::new("name = ").unwrap();
        assert_eq!(stackmorse_scenario_from_toml(bad.as_ptr(), &mut s), StackmorseStatus::Parse);
        assert!(s.is_null());
        assert!(last_error().unwrap().contains("<toml>"));

        let invalid = CString::new(SPHERE.replace("poincare = [1, 0, 1]", "poincare = [1, 0, 1, 0]")).unwrap();
        assert_eq!(stackmorse_scenario_from_toml(invalid.as_ptr(), &mut s), StackmorseStatus::Validation);
        assert!(last_error().unwrap().contains("references.poincare"));

        let missing = CString::new("/nonexistent/scenario.toml").unwrap();
        assert_eq!(stackmorse_scenario_load(missing.as_ptr(), &mut s), StackmorseStatus::Io);

        let bytes = [0xffu8, 0xfe, 0];
        assert_eq!(stackmorse_scenario_from_json(bytes.as_ptr().cast(), &mut s), StackmorseStatus::InvalidUtf8);

        let r = run(scenario(SPHERE), STACKMORSE_TASK_ANALYZE);
        let mut o = StackmorseOrbit::default();
        assert_eq!(stackmorse_report_orbit(r, 5, &mut o), StackmorseStatus::OutOfRange);
        stackmorse_report_free(r);

        // Null handles are tolerated by the free functions and queries.
        stackmorse_report_free(ptr::null_mut());
        stackmorse_scenario_free(ptr::null_mut());
        stackmorse_string_free(ptr::null_mut());
        assert!(!stackmorse_report_passed(ptr::null()));
        assert_eq!(stackmorse_report_orbit_count(ptr::null()), 0);
    }
}

#[test]
fn shipped_json_scenario_loads() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/rp2.json");
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(stackmorse_scenario_load(c.as_ptr(), &mut s), StackmorseStatus::Ok);
        let r = run(s, STACKMORSE_TASK_ANALYZE);
        let mut poly = [0i64; 3];
        stackmorse_report_morse_polynomial(r, poly.as_mut_ptr(), 3);
        assert_eq!(poly, [1, 1, 1]);
        stackmorse_report_free(r);
        stackmorse_scenario_free(s);
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(stackmorse_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/stackmorse.h")).unwrap();
    for name in [
        "typedef struct StackmorseScenario StackmorseScenario;",
        "typedef struct StackmorseReport StackmorseReport;",
        "STACKMORSE_STATUS_VALIDATION = 5",
        "stackmorse_run(",
        "stackmorse_string_free(",
        "stackmorse_last_error(void)",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

/// Compiles and runs a small C program against the header and the static
/// library when a C compiler is on the path.
#[test]
fn c_program_links_and_runs() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).parent().unwrap().join(if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    });
    let lib = profile_dir.join("libstackmorse_ffi.a");
    if !cfg!(target_os = "linux") || !lib.exists() {
        eprintln!("skipping C smoke test: {} not found", lib.display());
        return;
    }
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("stackmorse_c_smoke");
    let status = std::process::Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status();
    let Ok(status) = status else {
        eprintln!("skipping C smoke test: no C compiler");
        return;
    };
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("orbits=2 poly=1,0,1 len=3 top_index=2 passed=1"), "{text}");
    assert!(text.contains("bad=4 null=1"), "{text}");
}
