use std::ffi::{c_char, CStr, CString};
use std::ptr;

use chromfem_ffi::*;

const SMALL: &str = "mesh.nx = 4\nmesh.ny = 4\ndt = 1/4\nT = 1\nboundary.g = mms\n";

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe {
        let full = chromfem_last_error(buf.as_mut_ptr(), buf.len());
        let msg = CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned();
        assert!(full >= msg.len());
        msg
    }
}

fn new_sim(text: &str) -> (ChromfemStatus, *mut ChromfemSimulation) {
    let text = CString::new(text).unwrap();
    let mut sim = ptr::null_mut();
    let status = unsafe { chromfem_simulation_new(text.as_ptr(), &mut sim) };
    (status, sim)
}

#[test]
fn run_to_final_time_and_copy_out() {
    let (status, sim) = new_sim(SMALL);
    assert_eq!(status, ChromfemStatus::Ok);
    assert!(!sim.is_null());
    unsafe {
        let (mut n, mut nt) = (0usize, 0usize);
        assert_eq!(chromfem_simulation_sizes(sim, &mut n, &mut nt), ChromfemStatus::Ok);
        assert_eq!((n, nt), (25, 32));

        assert_eq!(chromfem_simulation_step(sim), ChromfemStatus::Ok);
        assert_eq!(chromfem_simulation_run(sim), ChromfemStatus::Ok);
        let (mut t, mut step) = (0.0, 0usize);
        assert_eq!(chromfem_simulation_time(sim, &mut t, &mut step), ChromfemStatus::Ok);
        assert_eq!(step, 4);
        assert!((t - 1.0).abs() < 1e-12);

        let mut xy = vec![0.0; 2 * n];
        assert_eq!(chromfem_simulation_nodes(sim, xy.as_mut_ptr(), xy.len()), ChromfemStatus::Ok);
        let mut field = vec![f64::NAN; n];
        assert_eq!(chromfem_simulation_field(sim, field.as_mut_ptr(), n), ChromfemStatus::Ok);
        // Inflow nodes carry the exact trace t²(x³ - 1.5x² + 1)cos(πy/4) at t = 1.
        let corner = (0..n).find(|&i| xy[2 * i] == 0.0 && xy[2 * i + 1] == 0.0).unwrap();
        assert!((field[corner] - 1.0).abs() < 1e-12);
        assert!(field.iter().all(|v| v.is_finite()));

        let mut tris = vec![0usize; 3 * nt];
        assert_eq!(chromfem_simulation_triangles(sim, tris.as_mut_ptr(), tris.len()), ChromfemStatus::Ok);
        assert!(tris.iter().all(|&v| v < n));

        let mut row = ChromfemLedgerRow::default();
        assert_eq!(chromfem_simulation_ledger_row(sim, &mut row), ChromfemStatus::Ok);
        assert_eq!(row.step, 4);
        assert!(row.total_mass > 0.0);

        chromfem_simulation_free(sim);
    }
}

#[test]
fn set_field_round_trips() {
    let (_, sim) = new_sim(SMALL);
    unsafe {
        let values: Vec<f64> = (0..25).map(|i| i as f64 * 0.01).collect();
        assert_eq!(chromfem_simulation_set_field(sim, values.as_ptr(), 25), ChromfemStatus::Ok);
        let mut back = vec![0.0; 25];
        chromfem_simulation_field(sim, back.as_mut_ptr(), 25);
        assert_eq!(back, values);
        assert_eq!(
            chromfem_simulation_set_field(sim, values.as_ptr(), 24),
            ChromfemStatus::InvalidArgument
        );
        assert!(!last_error().is_empty());
        chromfem_simulation_free(sim);
    }
}

#[test]
fn bad_config_reports_config_status() {
    let (status, sim) = new_sim("mesh.nx = 4\nnot_a_key = 1\n");
    assert_eq!(status, ChromfemStatus::Config);
    assert!(sim.is_null());
    assert!(last_error().contains("not_a_key"));
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut sim = ptr::null_mut();
        assert_eq!(chromfem_simulation_new(ptr::null(), &mut sim), ChromfemStatus::InvalidArgument);
        assert_eq!(chromfem_simulation_step(ptr::null_mut()), ChromfemStatus::InvalidArgument);
        assert_eq!(last_error(), "simulation handle is null");
        chromfem_simulation_free(ptr::null_mut());
    }
}

#[test]
fn short_buffer_is_rejected() {
    let (_, sim) = new_sim(SMALL);
    unsafe {
        let mut buf = [0.0; 10];
        assert_eq!(
            chromfem_simulation_field(sim, buf.as_mut_ptr(), buf.len()),
            ChromfemStatus::InvalidArgument
        );
        assert!(last_error().contains("25 needed"));
        chromfem_simulation_free(sim);
    }
}

#[test]
fn last_error_truncates_and_reports_length() {
    let (_, sim) = new_sim("mesh.nx = 4\nnot_a_key = 1\n");
    assert!(sim.is_null());
    unsafe {
        let full = chromfem_last_error(ptr::null_mut(), 0);
        assert!(full > 8);
        let mut buf = [0x7f as c_char; 8];
        assert_eq!(chromfem_last_error(buf.as_mut_ptr(), buf.len()), full);
        assert_eq!(buf[7], 0);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_bytes().len(), 7);
    }
}

#[test]
fn success_clears_last_error() {
    let _ = new_sim("bogus");
    assert!(!last_error().is_empty());
    let (status, sim) = new_sim(SMALL);
    assert_eq!(status, ChromfemStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { chromfem_simulation_free(sim) };
}

#[test]
fn langmuir_eval_matches_closed_form() {
    let iso = ChromfemIsotherm { kind: ChromfemIsothermKind::Langmuir, p0: 2.0, p1: 0.5 };
    let mut s = ChromfemIsothermSample { q: 0.0, dq: 0.0, d2q: 0.0, q_integral: 0.0, a_integral: 0.0 };
    unsafe {
        assert_eq!(chromfem_isotherm_eval(iso, 2.0, &mut s), ChromfemStatus::Ok);
    }
    assert!((s.q - 1.0).abs() < 1e-14);
    assert!((s.dq - 0.25).abs() < 1e-14);
    // ∫₀² s q'(s) ds = c q(c) - ∫₀² q = 2 - (2·2 - 4 ln 2).
    assert!((s.a_integral - (4.0 * 2f64.ln() - 2.0)).abs() < 1e-12);

    let bad = ChromfemIsotherm { kind: ChromfemIsothermKind::Langmuir, p0: 1.0, p1: 1.0 };
    unsafe {
        assert_eq!(chromfem_isotherm_eval(bad, -2.0, &mut s), ChromfemStatus::Numerical);
        assert_eq!(chromfem_isotherm_eval(iso, 1.0, ptr::null_mut()), ChromfemStatus::InvalidArgument);
    }
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(chromfem_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/chromfem.h")).unwrap();
    for name in [
        "chromfem_last_error",
        "chromfem_version",
        "chromfem_isotherm_eval",
        "chromfem_simulation_new",
        "chromfem_simulation_free",
        "chromfem_simulation_step",
        "chromfem_simulation_run",
        "chromfem_simulation_time",
        "chromfem_simulation_sizes",
        "chromfem_simulation_nodes",
        "chromfem_simulation_triangles",
        "chromfem_simulation_field",
        "chromfem_simulation_set_field",
        "chromfem_simulation_ledger_row",
        "typedef struct ChromfemSimulation ChromfemSimulation",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(format!("{dir}/include"))
        .arg(format!("{dir}/examples/smoke.c"))
        .status()
    else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    assert!(status.success());
}
