use chromfem::Isotherm;

use crate::status::{from_error, guard, ChromfemStatus};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChromfemIsothermKind {
    /// `q = p0`
    Constant = 0,
    /// `q = p0 + p1·c`
    Affine = 1,
    /// `q = p0·p1·c / (1 + p1·c)` with `p0 = q_max`, `p1 = K_eq`
    Langmuir = 2,
}

/// An isotherm law with up to two parameters.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ChromfemIsotherm {
    pub kind: ChromfemIsothermKind,
    pub p0: f64,
    pub p1: f64,
}

impl From<ChromfemIsotherm> for Isotherm {
    fn from(iso: ChromfemIsotherm) -> Self {
        match iso.kind {
            ChromfemIsothermKind::Constant => Isotherm::Constant { k: iso.p0 },
            ChromfemIsothermKind::Affine => Isotherm::Affine { k1: iso.p0, k2: iso.p1 },
            ChromfemIsothermKind::Langmuir => Isotherm::Langmuir {
                q_max: iso.p0,
                k_eq: iso.p1,
            },
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ChromfemIsothermSample {
    pub q: f64,
    pub dq: f64,
    pub d2q: f64,
    /// `∫₀^c q(s) ds`
    pub q_integral: f64,
    /// `∫₀^c s·q′(s) ds`
    pub a_integral: f64,
}

/// Evaluate `iso` and its derived quantities at `c`.
#[no_mangle]
pub unsafe extern "C" fn chromfem_isotherm_eval(
    iso: ChromfemIsotherm,
    c: f64,
    out: *mut ChromfemIsothermSample,
) -> ChromfemStatus {
    guard(|| {
        if out.is_null() {
            return crate::status::fail(ChromfemStatus::InvalidArgument, "out is null");
        }
        let iso = Isotherm::from(iso);
        match iso.validate().and_then(|_| iso.eval(c)) {
            Ok(s) => {
                *out = ChromfemIsothermSample {
                    q: s.q,
                    dq: s.dq,
                    d2q: s.d2q,
                    q_integral: s.q_integral,
                    a_integral: s.a_integral,
                };
                ChromfemStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}
