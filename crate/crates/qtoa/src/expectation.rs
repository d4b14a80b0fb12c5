//! Expected arrival time `⟨φ|T|φ⟩` by direct quadrature of the kernel.
//!
//! Two independent routes are provided:
//!
//! * [`expect_toa_exact`] integrates `φ̄(q) K(q,q') φ(q')` over the two
//!   triangles `q > q'` and `q < q'` (the kernel jumps across the diagonal);
//! * [`expect_toa_centered`] uses `x = (q+q')/2`, `y = (q−q')/2`, in which the
//!   boost phase factors out as `e^{−2iμv0y/ħ}` and the kernel becomes
//!   `(μi/ħ) x sgn(y) ½ 0F1(; 2; −2μ²g x y²/ħ²)` (Jacobian 2).
//!
//! Both use panel Gauss–Legendre rules whose panel width is tied to the
//! fastest phase of the integrand, and both *must* pass a refinement test:
//! halving the panel width may not change the result by more than the
//! requested tolerance.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QtoaError, Result};
use crate::numerics::{gauss_legendre_unit, hyp0f1};
use crate::states::ComplexAmplitude;
use crate::toa_kernel::{kernel_value, KernelSpec};
use crate::warning::Warning;

/// Quadrature controls for the double integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadControl {
    /// Relative tolerance of the refinement test.
    pub tol: f64,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Maximum number of panel halvings before giving up.
    pub max_halvings: usize,
    /// Upper bound on the panel width as a fraction of the window.
    pub max_panel_fraction: f64,
}

impl Default for QuadControl {
    fn default() -> Self {
        QuadControl {
            tol: 1e-9,
            order: 8,
            max_halvings: 4,
            max_panel_fraction: 1.0 / 16.0,
        }
    }
}

/// Result of an expectation-value quadrature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectationRecord {
    /// Signed real part of the converged integral.
    pub value: f64,
    /// Imaginary part of the raw integral.
    pub imag_residue: f64,
    /// Outer panel count of the accepted rule.
    pub panels: usize,
    /// Change observed in the last refinement step.
    pub refinement_change: f64,
    pub tol: f64,
    pub warnings: Vec<Warning>,
}

impl ExpectationRecord {
    pub fn magnitude(&self) -> f64 {
        self.value.abs()
    }

    /// `|Im| / |Re|` of the raw integral.
    pub fn relative_residue(&self) -> f64 {
        self.imag_residue.abs() / self.value.abs().max(f64::MIN_POSITIVE)
    }
}

/// Panel Gauss–Legendre integral of `f(x, y)` over
/// `{a ≤ x ≤ b, lo(x) ≤ y ≤ hi(x)}`; outer panels are processed in parallel
/// and reduced in a fixed order.
fn nested<L, F>(a: f64, b: f64, h_outer: f64, h_inner: f64, order: usize, bounds: L, f: F) -> Complex64
where
    L: Fn(f64) -> (f64, f64) + Sync,
    F: Fn(f64, f64) -> Complex64 + Sync,
{
    let (gx, gw) = gauss_legendre_unit::<f64>(order);
    let panels = (((b - a) / h_outer).ceil() as usize).max(1);
    let width = (b - a) / panels as f64;
    let partial: Vec<Complex64> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let mid = a + width * (p as f64 + 0.5);
            let mut acc = Complex64::new(0.0, 0.0);
            for (&tx, &wx) in gx.iter().zip(&gw) {
                let x = mid + 0.5 * width * tx;
                let (lo, hi) = bounds(x);
                if hi <= lo {
                    continue;
                }
                let m = (((hi - lo) / h_inner).ceil() as usize).max(1);
                let hw = (hi - lo) / m as f64;
                let mut inner = Complex64::new(0.0, 0.0);
                for s in 0..m {
                    let ym = lo + hw * (s as f64 + 0.5);
                    for (&ty, &wy) in gx.iter().zip(&gw) {
                        inner += f(x, ym + 0.5 * hw * ty) * wy;
                    }
                }
                acc += inner * (0.5 * hw * 0.5 * width * wx);
            }
            acc
        })
        .collect();
    partial.into_iter().sum()
}

/// Starting panel width: a quarter period of the fastest phase, capped at a
/// fraction of the window.
fn base_width(window: f64, rate: f64, ctrl: &QuadControl) -> f64 {
    let quarter = 0.5 * std::f64::consts::PI / rate.max(1e-300);
    quarter.min(window * ctrl.max_panel_fraction)
}

fn truncation_warning(phi: &ComplexAmplitude) -> Option<Warning> {
    let (a, b) = phi.window();
    let peak = phi.peak_abs();
    let edge = phi.eval(a).norm().max(phi.eval(b).norm());
    let ratio = edge / peak;
    (ratio > 1e-10).then_some(Warning::SupportTruncation { edge_ratio: ratio })
}

fn refine<F>(ctrl: &QuadControl, context: &str, h0: f64, mut eval: F) -> Result<(Complex64, usize, f64)>
where
    F: FnMut(f64) -> Complex64,
{
    if !(ctrl.tol > 0.0) || ctrl.order == 0 {
        return Err(QtoaError::invalid("quadrature control needs tol > 0 and order ≥ 1"));
    }
    let mut h = h0;
    let mut prev = eval(h);
    let mut level = 1usize;
    for _ in 0..=ctrl.max_halvings {
        h *= 0.5;
        level *= 2;
        let next = eval(h);
        let change = (next - prev).norm();
        if change <= ctrl.tol * next.norm().max(f64::MIN_POSITIVE) {
            return Ok((next, level, change));
        }
        prev = next;
    }
    let change = (eval(h * 0.5) - prev).norm();
    Err(QtoaError::QuadratureNotConverged {
        context: context.to_string(),
        change: change / prev.norm().max(f64::MIN_POSITIVE),
        tol: ctrl.tol,
    })
}

/// `∬ φ̄(q) K(q,q') φ(q') dq' dq` over the amplitude's window.
pub fn expect_toa_exact(
    phi: &ComplexAmplitude,
    spec: &KernelSpec,
    ctrl: &QuadControl,
) -> Result<ExpectationRecord> {
    let (a, b) = phi.window();
    let rate = phi.max_rate();
    let h0 = base_width(b - a, rate, ctrl);
    let mut warnings = Vec::new();
    if let Some(w) = truncation_warning(phi) {
        warnings.push(w);
    }
    let integrand = |q: f64, qp: f64| phi.eval(q).conj() * kernel_value(q, qp, spec) * phi.eval(qp);
    let (value, level, change) = refine(ctrl, "exact expectation double integral", h0, |h| {
        // Lower triangle q' < q and upper triangle q' > q.
        let lower = nested(a, b, h, h, ctrl.order, |q| (a, q), integrand);
        let upper = nested(a, b, h, h, ctrl.order, |q| (q, b), integrand);
        lower + upper
    })?;
    Ok(ExpectationRecord {
        value: value.re,
        imag_residue: value.im,
        panels: (((b - a) / (h0 / level as f64)).ceil()) as usize,
        refinement_change: change,
        tol: ctrl.tol,
        warnings,
    })
}

/// Boost velocity of a closed-form amplitude (0 when none is known); used
/// to factor the boost phase out of the centred integrand.
fn boost(phi: &ComplexAmplitude) -> (f64, f64) {
    match phi {
        ComplexAmplitude::Gaussian(g) => (g.spec.v0, g.mass / g.hbar),
        _ => (0.0, 0.0),
    }
}

/// Same expectation in the rotated variables `(x, y)`, with the boost phase
/// `e^{−2iμv0y/ħ}` written explicitly and the envelopes `ϕ = e^{−iμv0q/ħ} φ`.
pub fn expect_toa_centered(
    phi: &ComplexAmplitude,
    spec: &KernelSpec,
    ctrl: &QuadControl,
) -> Result<ExpectationRecord> {
    let (a, b) = phi.window();
    let (v0, k_per_v) = boost(phi);
    let k0 = k_per_v * v0;
    let envelope = |q: f64| phi.eval(q) * Complex64::from_polar(1.0, -k0 * q);
    let env_rate = (phi.max_rate() - k0.abs()).max(1.0 / (b - a));
    let y_rate = 2.0 * k0.abs() + 2.0 * env_rate;
    let h0 = base_width(b - a, y_rate, ctrl);
    let mut warnings = Vec::new();
    if let Some(w) = truncation_warning(phi) {
        warnings.push(w);
    }
    let c = spec.mass * spec.mass * spec.g / (spec.hbar * spec.hbar);
    let pref = Complex64::new(0.0, spec.mass / spec.hbar);
    // Fold y < 0 onto y > 0: sgn(y) flips and the envelopes swap.
    let integrand = |x: f64, y: f64| {
        let f = hyp0f1(2.0, -2.0 * c * x * y * y);
        let phase = Complex64::from_polar(1.0, -2.0 * k0 * y);
        let plus = phase * envelope(x + y).conj() * envelope(x - y);
        let minus = phase.conj() * envelope(x - y).conj() * envelope(x + y);
        pref * (x * f) * (plus - minus)
    };
    let (value, level, change) = refine(ctrl, "centred expectation double integral", h0, |h| {
        nested(a, b, h, h, ctrl.order, |x| (0.0, (x - a).min(b - x)), integrand)
    })?;
    Ok(ExpectationRecord {
        value: value.re,
        imag_residue: value.im,
        panels: (((b - a) / (h0 / level as f64)).ceil()) as usize,
        refinement_change: change,
        tol: ctrl.tol,
        warnings,
    })
}
