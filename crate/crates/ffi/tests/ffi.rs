use std::ffi::{c_char, CString};
use std::ptr;

use pac_ffi::*;

const CHAIN: &str = "csp 3 * 2\ncon 0 1 3\n0 0\n0 1\n1 1\ncon 1 2 3\n0 0\n0 1\n1 1\n";

fn parse(text: &str) -> *mut PacInstance {
    let c = CString::new(text).unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { pac_instance_parse(c.as_ptr(), &mut inst) }, PacError::Ok);
    inst
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { pac_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn propagate_on_a_chain() {
    let inst = parse(CHAIN);
    unsafe {
        assert_eq!(pac_instance_num_vars(inst), 3);
        assert_eq!(pac_instance_domain_size(inst, 2), 2);
        assert_eq!(pac_instance_domain_size(inst, 3), 0);
        let mut res = ptr::null_mut();
        assert_eq!(pac_propagate(inst, 1e-12, 100, PacMode::Standard, &mut res), PacError::Ok);
        let (mut kind, mut k) = (PacStatusKind::Wipeout, 0);
        assert_eq!(pac_beliefs_status(res, &mut kind, &mut k), PacError::Ok);
        assert_eq!(kind, PacStatusKind::Converged);
        let mut p = 0.0;
        assert_eq!(pac_beliefs_get(res, 0, 0, &mut p), PacError::Ok);
        assert!((p - 0.75).abs() < 1e-9);
        assert_eq!(pac_beliefs_get(res, 0, 5, &mut p), PacError::OutOfRange);
        pac_beliefs_free(res);
        pac_instance_free(inst);
    }
}

#[test]
fn count_ac3_and_solve() {
    let inst = parse(CHAIN);
    unsafe {
        let (mut total, mut truncated) = (0u64, -1);
        assert_eq!(pac_count(inst, 0, &mut total, &mut truncated), PacError::Ok);
        assert_eq!((total, truncated), (4, 0));
        assert_eq!(pac_count(inst, 2, &mut total, &mut truncated), PacError::Ok);
        assert_eq!(truncated, 1);

        let mut live = [9u8; 6];
        let mut wipeout = -1;
        assert_eq!(pac_ac3(inst, live.as_mut_ptr(), 6, &mut wipeout), PacError::Ok);
        assert_eq!((live, wipeout), ([1; 6], 0));
        assert_eq!(pac_ac3(inst, live.as_mut_ptr(), 5, &mut wipeout), PacError::InvalidArgument);

        for h in ["lex", "pac-dynamic", "peleg"] {
            let name = CString::new(h).unwrap();
            let mut a = [usize::MAX; 3];
            let (mut outcome, mut bt) = (PacOutcome::LimitReached, 7);
            assert_eq!(pac_solve(inst, name.as_ptr(), 1, 0, a.as_mut_ptr(), 3, &mut outcome, &mut bt), PacError::Ok);
            assert_eq!(outcome, PacOutcome::Solution);
            assert_eq!(bt, 0);
            assert!(a.windows(2).all(|w| w[0] <= w[1]), "{h}: {a:?}");
        }
        let bad = CString::new("no-such").unwrap();
        let mut a = [0usize; 3];
        let (mut outcome, mut bt) = (PacOutcome::LimitReached, 0);
        assert_ne!(pac_solve(inst, bad.as_ptr(), 1, 0, a.as_mut_ptr(), 3, &mut outcome, &mut bt), PacError::Ok);
        assert!(!last_error().is_empty());
        pac_instance_free(inst);
    }
}

#[test]
fn unsatisfiable_instance() {
    let inst = parse("csp 2 * 1\ncon 0 1 0\n");
    unsafe {
        let mut live = [1u8; 2];
        let mut wipeout = 0;
        assert_eq!(pac_ac3(inst, live.as_mut_ptr(), 2, &mut wipeout), PacError::Ok);
        assert_eq!(wipeout, 1);
        let name = CString::new("lex").unwrap();
        let mut a = [0usize; 2];
        let (mut outcome, mut bt) = (PacOutcome::Solution, 0);
        assert_eq!(pac_solve(inst, name.as_ptr(), 0, 0, a.as_mut_ptr(), 2, &mut outcome, &mut bt), PacError::Ok);
        assert_eq!((outcome, bt), (PacOutcome::Unsatisfiable, 1));
        pac_instance_free(inst);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let text = CString::new("csp 2 * 2\ncon 0 0 0\n").unwrap();
        let mut inst = ptr::null_mut();
        assert_eq!(pac_instance_parse(text.as_ptr(), &mut inst), PacError::Parse);
        assert!(inst.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(pac_instance_parse(ptr::null(), &mut inst), PacError::NullPointer);
        assert_eq!(last_error(), "null argument");

        let mut res = ptr::null_mut();
        assert_eq!(pac_propagate(ptr::null(), 1e-5, 10, PacMode::Standard, &mut res), PacError::NullPointer);
        assert_eq!(pac_instance_generate(4, 2, 0.5, 1.5, 0, &mut inst), PacError::InvalidArgument);
        assert_eq!(pac_instance_generate(4, 2, 0.5, 0.5, 0, &mut inst), PacError::Ok);
        assert_eq!(pac_propagate(inst, -1.0, 10, PacMode::Boolean, &mut res), PacError::InvalidArgument);
        pac_instance_free(inst);
        pac_instance_free(ptr::null_mut());
        pac_beliefs_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/pac.h")).unwrap();
    for f in [
        "pac_last_error",
        "pac_instance_parse",
        "pac_instance_generate",
        "pac_instance_free",
        "pac_instance_num_vars",
        "pac_instance_domain_size",
        "pac_propagate",
        "pac_beliefs_status",
        "pac_beliefs_get",
        "pac_beliefs_free",
        "pac_ac3",
        "pac_count",
        "pac_solve",
    ] {
        assert!(header.contains(&format!("{f}(")), "{f} missing");
    }
    assert!(header.contains("typedef struct PacInstance PacInstance;"));
    assert!(header.contains("PAC_ERROR_PANIC = 7"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        return;
    };
    if !cc.status.success() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"pac.h\"\nint main(void) { PacInstance *i = 0; return pac_instance_parse(\"\", &i) == PAC_ERROR_OK; }\n",
    )
    .unwrap();
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
