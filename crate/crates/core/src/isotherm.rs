//! Adsorption isotherms `q(C)` and the calculus the solver and ledger need.
//!
//! Negative concentrations are evaluated with the same closed forms; nothing
//! is clamped. Positivity is a diagnostic concern, see [`crate::diagnostics`].

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Isotherm {
    /// `q ≡ k`
    Constant { k: f64 },
    /// `q = k1 + k2·C`
    Affine { k1: f64, k2: f64 },
    /// `q = q_max·k_eq·C / (1 + k_eq·C)`
    Langmuir { q_max: f64, k_eq: f64 },
}

/// Values of the isotherm and its derived quantities at one concentration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsothermSample {
    pub q: f64,
    pub dq: f64,
    pub d2q: f64,
    /// `∫₀^C q(s) ds`
    pub q_integral: f64,
    /// `∫₀^C s·q′(s) ds`
    pub a_integral: f64,
}

impl Isotherm {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Isotherm::Constant { k } => k >= 0.0 && k.is_finite(),
            Isotherm::Affine { k1, k2 } => k1 >= 0.0 && k2 >= 0.0 && k1.is_finite() && k2.is_finite(),
            Isotherm::Langmuir { q_max, k_eq } => {
                q_max > 0.0 && k_eq > 0.0 && q_max.is_finite() && k_eq.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Problem(format!("invalid isotherm parameters: {self:?}")))
        }
    }

    /// `1 + k_eq·c` for Langmuir; errors at and beyond the pole.
    fn langmuir_denominator(k_eq: f64, c: f64) -> Result<f64> {
        let d = 1.0 + k_eq * c;
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::IsothermDomain { c })
        }
    }

    pub fn q(&self, c: f64) -> Result<f64> {
        Ok(match *self {
            Isotherm::Constant { k } => k,
            Isotherm::Affine { k1, k2 } => k1 + k2 * c,
            Isotherm::Langmuir { q_max, k_eq } => {
                q_max * k_eq * c / Self::langmuir_denominator(k_eq, c)?
            }
        })
    }

    pub fn dq(&self, c: f64) -> Result<f64> {
        Ok(match *self {
            Isotherm::Constant { .. } => 0.0,
            Isotherm::Affine { k2, .. } => k2,
            Isotherm::Langmuir { q_max, k_eq } => {
                let d = Self::langmuir_denominator(k_eq, c)?;
                q_max * k_eq / (d * d)
            }
        })
    }

    pub fn eval(&self, c: f64) -> Result<IsothermSample> {
        Ok(match *self {
            Isotherm::Constant { k } => IsothermSample {
                q: k,
                dq: 0.0,
                d2q: 0.0,
                q_integral: k * c,
                a_integral: 0.0,
            },
            Isotherm::Affine { k1, k2 } => IsothermSample {
                q: k1 + k2 * c,
                dq: k2,
                d2q: 0.0,
                q_integral: k1 * c + 0.5 * k2 * c * c,
                a_integral: 0.5 * k2 * c * c,
            },
            Isotherm::Langmuir { q_max, k_eq } => {
                let d = Self::langmuir_denominator(k_eq, c)?;
                let x = k_eq * c;
                IsothermSample {
                    q: q_max * x / d,
                    dq: q_max * k_eq / (d * d),
                    d2q: -2.0 * q_max * k_eq * k_eq / (d * d * d),
                    q_integral: q_max / k_eq * x_minus_log1p(x),
                    a_integral: q_max / k_eq * log1p_minus_ratio(x),
                }
            }
        })
    }

    /// Constant `q′` when the isotherm is linear in `C`.
    pub fn linear_slope(&self) -> Option<f64> {
        match *self {
            Isotherm::Constant { .. } => Some(0.0),
            Isotherm::Affine { k2, .. } => Some(k2),
            Isotherm::Langmuir { .. } => None,
        }
    }
}

// Small-argument series keep the antiderivatives accurate near C = 0,
// where the closed forms cancel catastrophically.
const SERIES_CUTOFF: f64 = 1e-2;

/// `x − ln(1 + x)`
fn x_minus_log1p(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        // Σ_{k≥2} (−1)^k x^k / k
        let mut term = x * x;
        let mut sum = 0.0;
        for k in 2..12 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * term / k as f64;
            term *= x;
        }
        sum
    } else {
        x - x.ln_1p()
    }
}

/// `ln(1 + x) + 1/(1 + x) − 1`
fn log1p_minus_ratio(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        // Σ_{k≥2} (−1)^k (k−1)/k x^k
        let mut term = x * x;
        let mut sum = 0.0;
        for k in 2..12 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (k - 1) as f64 / k as f64 * term;
            term *= x;
        }
        sum
    } else {
        x.ln_1p() + 1.0 / (1.0 + x) - 1.0
    }
}

/// Effective storage coefficient `ω + (1 − ω)ρ_s·K2` of the affine case.
pub fn affine_storage(omega: f64, rho_s: f64, k2: f64) -> f64 {
    omega + (1.0 - omega) * rho_s * k2
}
