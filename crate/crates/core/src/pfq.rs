//! Generalized hypergeometric series `pFq(a; c; z)` and Frobenius-type
//! `theta = z d/dz` derivatives of `(-z)^rho * pFq(a; c; z)`, the building
//! blocks of the power-series solutions used by the block transport.
//!
//! The series used here have unit radius of convergence; callers pass an
//! explicit guard radius and evaluation refuses arguments beyond it.

use crate::error::{Result, TodaError};
use crate::exact::f64_near_integer;

const MAX_TERMS: usize = 50_000;
const TERM_EPS: f64 = 1e-17;

fn check_lower_parameters(c: &[f64]) -> Result<()> {
    for &cj in c {
        if let Some(k) = f64_near_integer(cj, 1e-9) {
            if k <= 0 {
                return Err(TodaError::LowerParameterPole { value: cj });
            }
        }
    }
    Ok(())
}

/// `pFq(a; c; z)` by direct summation. `radius` bounds `|z|`; the series on
/// the unit disk needs `radius < 1` to keep the tail controllable.
pub fn pfq(a: &[f64], c: &[f64], z: f64, radius: f64) -> Result<f64> {
    check_lower_parameters(c)?;
    if z.abs() > radius {
        return Err(TodaError::RadiusExceeded { abs_z: z.abs(), radius });
    }
    let mut term = 1.0f64;
    let mut acc = 1.0f64;
    let mut small_streak = 0;
    for m in 0..MAX_TERMS {
        let mf = m as f64;
        let mut ratio = z / (mf + 1.0);
        for &ai in a {
            ratio *= ai + mf;
        }
        for &cj in c {
            ratio /= cj + mf;
        }
        term *= ratio;
        acc += term;
        if term.abs() <= TERM_EPS * acc.abs().max(1.0) {
            small_streak += 1;
            if small_streak >= 3 {
                return Ok(acc);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(TodaError::SeriesNoConvergence { max_terms: MAX_TERMS, abs_z: z.abs() })
}

/// The first `count` theta-derivatives `theta^k [(-z)^rho pFq(a; c; z)]`,
/// `theta = z d/dz`, for `z < 0` (where `(-z)^rho` is real).
///
/// Termwise: `theta^k [(-z)^rho z^m] = (rho + m)^k (-z)^rho z^m`.
pub fn pfq_theta_derivs(
    a: &[f64],
    c: &[f64],
    rho: f64,
    z: f64,
    count: usize,
    radius: f64,
) -> Result<Vec<f64>> {
    check_lower_parameters(c)?;
    if z >= 0.0 {
        return Err(TodaError::OutsideDomain(z, "need z < 0 for a real (-z)^rho".into()));
    }
    if z.abs() > radius {
        return Err(TodaError::RadiusExceeded { abs_z: z.abs(), radius });
    }
    let prefactor = rho * (-z).ln();
    let mut term = 1.0f64; // t_m z^m
    let mut acc = vec![0.0f64; count];
    let mut scale = 1.0f64;
    for (k, slot) in acc.iter_mut().enumerate() {
        *slot = rho.powi(k as i32);
        scale = scale.max(slot.abs());
    }
    let mut small_streak = 0;
    for m in 0..MAX_TERMS {
        let mf = m as f64;
        let mut ratio = z / (mf + 1.0);
        for &ai in a {
            ratio *= ai + mf;
        }
        for &cj in c {
            ratio /= cj + mf;
        }
        term *= ratio;
        let base = rho + mf + 1.0;
        let mut pw = 1.0;
        for slot in acc.iter_mut() {
            *slot += term * pw;
            pw *= base;
        }
        // The largest theta power dominates the error estimate.
        let top = term.abs() * pw.abs().max(1.0);
        scale = scale.max(acc.last().map_or(1.0, |v| v.abs()));
        if top <= TERM_EPS * scale.max(1.0) {
            small_streak += 1;
            if small_streak >= 3 {
                return Ok(acc.into_iter().map(|v| v * prefactor.exp()).collect());
            }
        } else {
            small_streak = 0;
        }
    }
    Err(TodaError::SeriesNoConvergence { max_terms: MAX_TERMS, abs_z: z.abs() })
}
