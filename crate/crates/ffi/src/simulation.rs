use std::ffi::{c_char, CStr};
use std::panic::AssertUnwindSafe;
use std::slice;

use chromfem::diagnostics::ledger_row;
use chromfem::stepper::step_count;
use chromfem::{RunConfig, Simulation};

use crate::status::{fail, from_error, guard, ChromfemStatus};

/// Opaque simulation handle.
pub struct ChromfemSimulation {
    sim: Simulation,
    steps: usize,
}

/// One row of the mass ledger for the current state.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ChromfemLedgerRow {
    pub step: usize,
    pub time: f64,
    pub total_mass: f64,
    pub inflow_flux: f64,
    pub outflow_flux: f64,
    pub inflow_q_flux: f64,
    pub outflow_q_flux: f64,
    pub dissipation: f64,
    pub min_nodal: f64,
}

macro_rules! handle {
    ($ptr:expr) => {
        match $ptr.as_mut() {
            Some(h) => h,
            None => return fail(ChromfemStatus::InvalidArgument, "simulation handle is null"),
        }
    };
}

macro_rules! out_ptr {
    ($ptr:expr, $name:literal) => {
        match $ptr.as_mut() {
            Some(p) => p,
            None => return fail(ChromfemStatus::InvalidArgument, concat!($name, " is null")),
        }
    };
}

unsafe fn out_slice<'a, T>(ptr: *mut T, len: usize, needed: usize) -> Result<&'a mut [T], ChromfemStatus> {
    if ptr.is_null() {
        return Err(fail(ChromfemStatus::InvalidArgument, "output buffer is null"));
    }
    if len < needed {
        return Err(fail(
            ChromfemStatus::InvalidArgument,
            format!("output buffer holds {len} values, {needed} needed"),
        ));
    }
    Ok(slice::from_raw_parts_mut(ptr, needed))
}

/// Build a simulation from configuration text (`key = value` lines).
///
/// On success `*out` receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_new(
    config: *const c_char,
    out: *mut *mut ChromfemSimulation,
) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let out = out_ptr!(out, "out");
        *out = std::ptr::null_mut();
        if config.is_null() {
            return fail(ChromfemStatus::InvalidArgument, "config is null");
        }
        let Ok(text) = CStr::from_ptr(config).to_str() else {
            return fail(ChromfemStatus::InvalidArgument, "config is not valid UTF-8");
        };
        let build = || -> chromfem::Result<ChromfemSimulation> {
            let cfg: RunConfig = text.parse()?;
            let spec = cfg.problem();
            let mesh = cfg.mesh(&spec)?;
            let steps = step_count(cfg.t_final, cfg.scheme.dt)?;
            Ok(ChromfemSimulation {
                sim: Simulation::new(mesh, spec, cfg.scheme)?,
                steps,
            })
        };
        match build() {
            Ok(h) => {
                *out = Box::into_raw(Box::new(h));
                ChromfemStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    }))
}

/// Release a handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_free(sim: *mut ChromfemSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advance one time step.
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_step(sim: *mut ChromfemSimulation) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let h = handle!(sim);
        match h.sim.step() {
            Ok(_) => ChromfemStatus::Ok,
            Err(e) => from_error(&e),
        }
    }))
}

/// Advance to the configured final time `T`.
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_run(sim: *mut ChromfemSimulation) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let h = handle!(sim);
        while h.sim.state().step < h.steps {
            if let Err(e) = h.sim.step() {
                return from_error(&e);
            }
        }
        ChromfemStatus::Ok
    }))
}

/// Current time and step index.
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_time(
    sim: *const ChromfemSimulation,
    time: *mut f64,
    step: *mut usize,
) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let Some(h) = sim.as_ref() else {
            return fail(ChromfemStatus::InvalidArgument, "simulation handle is null");
        };
        let state = h.sim.state();
        if let Some(t) = time.as_mut() {
            *t = state.t;
        }
        if let Some(s) = step.as_mut() {
            *s = state.step;
        }
        ChromfemStatus::Ok
    }))
}

/// Node and triangle counts of the mesh.
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_sizes(
    sim: *const ChromfemSimulation,
    num_nodes: *mut usize,
    num_triangles: *mut usize,
) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let Some(h) = sim.as_ref() else {
            return fail(ChromfemStatus::InvalidArgument, "simulation handle is null");
        };
        if let Some(n) = num_nodes.as_mut() {
            *n = h.sim.mesh().num_nodes();
        }
        if let Some(n) = num_triangles.as_mut() {
            *n = h.sim.mesh().num_triangles();
        }
        ChromfemStatus::Ok
    }))
}

/// Copy node coordinates as interleaved `x, y` pairs (`2·num_nodes` values).
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_nodes(
    sim: *const ChromfemSimulation,
    xy: *mut f64,
    len: usize,
) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let Some(h) = sim.as_ref() else {
            return fail(ChromfemStatus::InvalidArgument, "simulation handle is null");
        };
        let nodes = h.sim.mesh().nodes();
        match out_slice(xy, len, 2 * nodes.len()) {
            Ok(buf) => {
                for (dst, p) in buf.chunks_exact_mut(2).zip(nodes) {
                    dst.copy_from_slice(p);
                }
                ChromfemStatus::Ok
            }
            Err(s) => s,
        }
    }))
}

/// Copy triangle connectivity (`3·num_triangles` node indices, counterclockwise).
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_triangles(
    sim: *const ChromfemSimulation,
    nodes: *mut usize,
    len: usize,
) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let Some(h) = sim.as_ref() else {
            return fail(ChromfemStatus::InvalidArgument, "simulation handle is null");
        };
        let tris = h.sim.mesh().triangles();
        match out_slice(nodes, len, 3 * tris.len()) {
            Ok(buf) => {
                for (dst, t) in buf.chunks_exact_mut(3).zip(tris) {
                    dst.copy_from_slice(t);
                }
                ChromfemStatus::Ok
            }
            Err(s) => s,
        }
    }))
}

/// Copy the nodal concentration (`num_nodes` values).
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_field(
    sim: *const ChromfemSimulation,
    values: *mut f64,
    len: usize,
) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let Some(h) = sim.as_ref() else {
            return fail(ChromfemStatus::InvalidArgument, "simulation handle is null");
        };
        let c = &h.sim.state().c;
        match out_slice(values, len, c.len()) {
            Ok(buf) => {
                buf.copy_from_slice(c);
                ChromfemStatus::Ok
            }
            Err(s) => s,
        }
    }))
}

/// Replace the nodal concentration; `len` must equal the node count.
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_set_field(
    sim: *mut ChromfemSimulation,
    values: *const f64,
    len: usize,
) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let h = handle!(sim);
        if values.is_null() {
            return fail(ChromfemStatus::InvalidArgument, "values is null");
        }
        match h.sim.set_field(slice::from_raw_parts(values, len).to_vec()) {
            Ok(()) => ChromfemStatus::Ok,
            Err(e) => fail(ChromfemStatus::InvalidArgument, e.to_string()),
        }
    }))
}

/// Mass-ledger row of the current state.
#[no_mangle]
pub unsafe extern "C" fn chromfem_simulation_ledger_row(
    sim: *const ChromfemSimulation,
    out: *mut ChromfemLedgerRow,
) -> ChromfemStatus {
    guard(AssertUnwindSafe(|| {
        let Some(h) = sim.as_ref() else {
            return fail(ChromfemStatus::InvalidArgument, "simulation handle is null");
        };
        let out = out_ptr!(out, "out");
        match ledger_row(h.sim.mesh(), h.sim.spec(), h.sim.state()) {
            Ok(r) => {
                *out = ChromfemLedgerRow {
                    step: r.step,
                    time: r.time,
                    total_mass: r.total_mass,
                    inflow_flux: r.inflow_flux,
                    outflow_flux: r.outflow_flux,
                    inflow_q_flux: r.inflow_q_flux,
                    outflow_q_flux: r.outflow_q_flux,
                    dissipation: r.dissipation,
                    min_nodal: r.min_nodal,
                };
                ChromfemStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    }))
}
