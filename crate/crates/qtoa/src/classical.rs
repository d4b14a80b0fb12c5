//! Classical arrival times, the binomial series that is quantized, and the
//! packet-spread bound.
//!
//! Positions enter exactly as the formulas are written: `q0` is passed
//! through unchanged and its sign is never reinterpreted. Callers that want
//! the "distance below the arrival point" reading flip the sign themselves.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QtoaError, Result};
use crate::numerics::binomial_half;
use crate::params::PhysicalParams;
use crate::states::WavepacketSpec;
use crate::warning::Warning;

/// Which root of the arrival quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalBranch {
    /// `T₋`, the first crossing.
    First,
    /// `T₊`, the crossing on the way back down.
    Second,
}

/// `T± = (v0/g)(1 ± √(1 − 2 g q0 / v0²))`, minus sign for the first branch.
///
/// Beyond the turning point the radicand is negative and the principal
/// square root makes the result complex (non-arrival); for the first branch
/// that gives `Im T₋ < 0`, which coincides with the `z − i0` side of the cut.
/// With `g = 0` the first branch is the free value `q0/v0`.
pub fn classical_toa(
    params: &PhysicalParams,
    q0: f64,
    v0: f64,
    branch: ArrivalBranch,
) -> Result<Complex64> {
    if v0 == 0.0 || !v0.is_finite() {
        return Err(QtoaError::invalid("classical arrival time needs a finite non-zero v0"));
    }
    let g = params.effective().g;
    if g == 0.0 {
        return match branch {
            ArrivalBranch::First => Ok(Complex64::new(q0 / v0, 0.0)),
            ArrivalBranch::Second => Ok(Complex64::new(f64::INFINITY, 0.0)),
        };
    }
    let z = 2.0 * g * q0 / (v0 * v0);
    let root = Complex64::new(1.0 - z, 0.0).sqrt();
    let sign = match branch {
        ArrivalBranch::First => -1.0,
        ArrivalBranch::Second => 1.0,
    };
    let scale = v0 / g;
    if z < 1.0 && branch == ArrivalBranch::First {
        // Cancellation-free form of 1 − √(1 − z) = z / (1 + √(1 − z)).
        return Ok(Complex64::new(scale * z / (1.0 + root.re), 0.0));
    }
    Ok((Complex64::new(1.0, 0.0) + root * sign) * scale)
}

/// Partial sum `2μ Σ_{n=0}^{N} C(1/2, n+1) (−2μ²g)ⁿ q0^{n+1} / p0^{2n+1}` of
/// the first-branch arrival time. A warning is attached outside the
/// convergence region `|2μ² g q0 / p0²| < 1`.
pub fn toa_series_partial(
    params: &PhysicalParams,
    q0: f64,
    p0: f64,
    n_max: usize,
) -> Result<(f64, Option<Warning>)> {
    if p0 == 0.0 || !p0.is_finite() {
        return Err(QtoaError::invalid("series needs a finite non-zero momentum"));
    }
    let e = params.effective();
    let mu = e.mass;
    let ratio = 2.0 * mu * mu * e.g * q0 / (p0 * p0);
    let mut sum = 0.0;
    // term_n = C(1/2,n+1) (−2μ²g)^n q0^{n+1} / p0^{2n+1}
    let mut power = q0 / p0; // (−2μ²g)^n q0^{n+1} / p0^{2n+1}
    for n in 0..=n_max {
        sum += binomial_half(n + 1) * power;
        power *= -2.0 * mu * mu * e.g * q0 / (p0 * p0);
    }
    let warning = if ratio.abs() >= 1.0 {
        Some(Warning::SeriesDivergent { ratio })
    } else {
        None
    };
    Ok((2.0 * mu * sum, warning))
}

/// Height `v0² / 2g` of the classical turning point above the launch point.
pub fn turning_point(v0: f64, g: f64) -> f64 {
    v0 * v0 / (2.0 * g)
}

/// Outcome of the spread check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadCheck {
    pub ok: bool,
    /// `v0²/g − 2 q0`.
    pub bound: f64,
    /// `bound − σ`; negative when violated.
    pub margin: f64,
}

/// A packet of spread `σ` stays clear of the turning point when
/// `σ < v0²/g − 2 q0`, with `q0` the launch-to-arrival distance.
pub fn spread_ok(spec: &WavepacketSpec, params: &PhysicalParams) -> SpreadCheck {
    let g = params.effective().g;
    let bound = if g == 0.0 {
        f64::INFINITY
    } else {
        spec.v0 * spec.v0 / g - 2.0 * spec.q0
    };
    let margin = bound - spec.sigma;
    SpreadCheck {
        ok: margin > 0.0,
        bound,
        margin,
    }
}

/// The warning form of [`spread_ok`], `None` when the bound holds.
pub fn spread_warning(spec: &WavepacketSpec, params: &PhysicalParams) -> Option<Warning> {
    let c = spread_ok(spec, params);
    (!c.ok).then_some(Warning::SpreadBound { margin: c.margin })
}
