use fracwave_ffi::*;
use std::ffi::c_void;
use std::path::Path;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let n = unsafe { fw_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0 as std::ffi::c_char; n];
    unsafe { fw_last_error_message(buf.as_mut_ptr(), n) };
    let bytes: Vec<u8> = buf.iter().take_while(|&&c| c != 0).map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn a_gamma_and_domain_errors() {
    let mut a = 0.0;
    assert_eq!(unsafe { fw_a_gamma(-0.5, 1.0, &mut a) }, FwStatus::Ok);
    // a_{−1/2} = 4 α₀ Γ(−1/2) Γ(3/2) cos(π/4) / (−π) = 2√2
    assert!((a - 2.0 * 2f64.sqrt()).abs() < 1e-13, "{a}");
    assert_eq!(unsafe { fw_a_gamma(1.5, 1.0, &mut a) }, FwStatus::Domain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { fw_a_gamma(0.5, 1.0, ptr::null_mut()) }, FwStatus::NullPointer);
    assert_eq!(last_error(), "out is null");
}

#[test]
fn scheme_handle_round_trip() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { fw_cq_new(1.0, 1.0, 4, &mut s) }, FwStatus::Domain);
    assert_eq!(unsafe { fw_cq_new(0.5, 0.1, 16, &mut s) }, FwStatus::Ok);
    assert_eq!(unsafe { fw_cq_len(s) }, 17);
    let mut w = vec![0.0; 17];
    assert_eq!(unsafe { fw_cq_weights(s, FwWeights::Omega, w.as_mut_ptr(), w.len()) }, FwStatus::Ok);
    assert!((w[0] - 15f64.sqrt()).abs() < 1e-13);
    assert_eq!(
        unsafe { fw_cq_weights(s, FwWeights::W0, w.as_mut_ptr(), 3) },
        FwStatus::BufferTooSmall
    );
    // the corrected rule is exact on g = t: ∂^{1/2} t = t^{1/2}/Γ(3/2), and at t = 1
    // Γ(3/2) = √π/2
    let g: Vec<f64> = (0..17).map(|j| j as f64 * 0.1).collect();
    let mut out = 0.0;
    assert_eq!(unsafe { fw_cq_apply(s, g.as_ptr(), g.len(), 10, true, &mut out) }, FwStatus::Ok);
    let exact = 2.0 / std::f64::consts::PI.sqrt();
    assert!((out - exact).abs() < 1e-10, "{out} vs {exact}");
    assert_eq!(unsafe { fw_cq_apply(s, g.as_ptr(), 5, 10, false, &mut out) }, FwStatus::Index);
    unsafe { fw_cq_free(s) };
    unsafe { fw_cq_free(ptr::null_mut()) };
    assert_eq!(unsafe { fw_cq_len(ptr::null()) }, 0);
}

unsafe extern "C" fn constant(_t: f64, data: *mut c_void) -> f64 {
    let calls = &mut *(data as *mut usize);
    *calls += 1;
    2.0
}

#[test]
fn volterra_with_callback() {
    let m = 200;
    let mut u = vec![0.0; m + 1];
    let mut calls = 0usize;
    let st = unsafe {
        fw_volterra_solve(
            0.5, 4.0, 0.0, Some(constant), &mut calls as *mut usize as *mut c_void,
            1.0, 0.0, 1.0, m, u.as_mut_ptr(), u.len(),
        )
    };
    assert_eq!(st, FwStatus::Ok);
    assert!(calls > 0);
    // u'' + 4u = 2, u(0) = 1, u'(0) = 0
    let exact = |t: f64| 0.5 + 0.5 * (2.0 * t).cos();
    assert!((u[m] - exact(1.0)).abs() < 1e-4, "{}", u[m]);
    let st = unsafe {
        fw_volterra_solve(0.5, 4.0, 0.0, None, ptr::null_mut(), 1.0, 0.0, 1.0, m, u.as_mut_ptr(), m)
    };
    assert_eq!(st, FwStatus::BufferTooSmall);
}

#[test]
fn convergence_handle() {
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { fw_convergence_run(FwCase::Smooth1d, -0.75, 1.0, true, 2, &mut r) },
        FwStatus::Domain
    );
    assert_eq!(
        unsafe { fw_convergence_run(FwCase::Smooth1d, -0.75, 1.0, true, 3, &mut r) },
        FwStatus::Ok
    );
    let n = unsafe { fw_convergence_levels(r) };
    assert_eq!(n, 3);
    let (mut h, mut e) = (vec![0.0; n], vec![0.0; n]);
    let st = unsafe { fw_convergence_errors(r, h.as_mut_ptr(), ptr::null_mut(), e.as_mut_ptr(), n) };
    assert_eq!(st, FwStatus::Ok);
    assert!(h[0] > h[1] && h[1] > h[2]);
    assert!(e.iter().all(|&x| x > 0.0));
    let (mut g, mut l) = (0.0, 0.0);
    assert_eq!(unsafe { fw_convergence_rate(r, &mut g, &mut l) }, FwStatus::Ok);
    assert!(g > 1.0, "{g}");
    unsafe { fw_convergence_free(r) };
}

#[test]
fn header_is_valid_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/fracwave.h")).unwrap();
    for sym in [
        "fw_last_error_message", "fw_a_gamma", "fw_cq_new", "fw_cq_free", "fw_cq_len", "fw_cq_weights",
        "fw_cq_apply", "fw_volterra_solve", "fw_convergence_run", "fw_convergence_free",
        "fw_convergence_levels", "fw_convergence_errors", "fw_convergence_rate", "FW_STATUS_OK",
        "typedef struct FwCqScheme FwCqScheme",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-x", "c"])
        .arg(dir.join("include/fracwave.h"))
        .output()
    else {
        eprintln!("no C compiler on PATH; syntax check skipped");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
