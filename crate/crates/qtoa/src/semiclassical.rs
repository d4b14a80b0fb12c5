//! The ħ-expansion `τ̄ = τ₀ + Σ_r α_r ħʳ` of the expected arrival time.
//!
//! A boosted state is written `φ(q) = e^{iμv0q/ħ} ϕ(q)`; the expansion
//! coefficients depend only on the envelope `ϕ` through
//!
//! ```text
//! W_r(x) = Σ_k C(r,k) (−1)^k ϕ̄^{(k)}(x) ϕ^{(r−k)}(x)
//! α_r    = (1/√π v0) (i/μv0)^r Γ((r+1)/2) Γ((r+2)/2) / r!
//!          · ∫ x 2F1((r+1)/2, (r+2)/2; 2; 2gx/v0²) W_r(x) dx
//! ```
//!
//! For Gaussian envelopes the closed forms below replace the integral by its
//! value at the packet centre. The integral route is exact for any width; the
//! closed form is its narrow-packet limit, so the two agree to `O(σ²)`.
//!
//! The expansion is asymptotic. Nothing here sums it to convergence.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::spread_warning;
use crate::error::{QtoaError, Result};
use crate::numerics::{binomial, gamma, gauss_legendre_unit, hermite, hyp2f1_row, rgamma, CutSide};
use crate::params::PhysicalParams;
use crate::states::{WavepacketSpec, GAUSSIAN_WINDOW_SIGMAS};
use crate::warning::Warning;

pub use crate::params::with_mass_split;

/// Highest derivative order accepted for sampled envelopes.
pub const GRID_MAX_ORDER: usize = 4;

/// One term `α_r ħʳ` of the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub order: usize,
    /// `α_r`, in units of time / ħʳ.
    pub coefficient: Complex64,
    /// `α_r ħʳ`, a time.
    pub contribution: Complex64,
}

/// Slowly varying envelope `ϕ` of a boosted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Envelope {
    /// `(σ√2π)^{-1/2} e^{−(x−q0)²/4σ²}`, differentiated through Hermite
    /// polynomials.
    Gaussian { q0: f64, sigma: f64 },
    /// Uniform samples, differentiated by central differences.
    Grid { q_min: f64, dq: f64, values: Vec<Complex64> },
}

impl Envelope {
    pub fn gaussian(spec: &WavepacketSpec) -> Self {
        Envelope::Gaussian {
            q0: spec.q0,
            sigma: spec.sigma,
        }
    }

    /// Interval carrying the envelope.
    pub fn window(&self) -> (f64, f64) {
        match self {
            Envelope::Gaussian { q0, sigma } => {
                let h = GAUSSIAN_WINDOW_SIGMAS * sigma;
                (q0 - h, q0 + h)
            }
            Envelope::Grid { q_min, dq, values } => (*q_min, q_min + dq * (values.len().max(1) - 1) as f64),
        }
    }

    /// `ϕ^{(n)}(x)`.
    pub fn derivative(&self, n: usize, x: f64) -> Result<Complex64> {
        match self {
            Envelope::Gaussian { q0, sigma } => {
                let u = (x - q0) / (2.0 * sigma);
                let norm = (sigma * (2.0 * std::f64::consts::PI).sqrt()).powf(-0.5);
                let scale = (-1.0 / (2.0 * sigma)).powi(n as i32);
                Ok(Complex64::new(norm * scale * hermite(n, u) * (-u * u).exp(), 0.0))
            }
            Envelope::Grid { q_min, dq, values } => {
                if n > GRID_MAX_ORDER {
                    return Err(QtoaError::invalid(format!(
                        "sampled envelopes support derivatives up to order {GRID_MAX_ORDER}, got {n}"
                    )));
                }
                Ok(grid_derivative(*q_min, *dq, values, n, x))
            }
        }
    }
}

/// Second-order central difference of order `n` at node `i` (zero where the
/// stencil leaves the grid).
fn node_derivative(values: &[Complex64], dq: f64, n: usize, i: usize) -> Complex64 {
    const STENCILS: [&[f64]; 5] = [
        &[1.0],
        &[-0.5, 0.0, 0.5],
        &[1.0, -2.0, 1.0],
        &[-0.5, 1.0, 0.0, -1.0, 0.5],
        &[1.0, -4.0, 6.0, -4.0, 1.0],
    ];
    let st = STENCILS[n];
    let half = st.len() / 2;
    if i < half || i + half >= values.len() {
        return Complex64::new(0.0, 0.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in st.iter().enumerate() {
        acc += values[i + k - half] * c;
    }
    acc / dq.powi(n as i32)
}

fn grid_derivative(q_min: f64, dq: f64, values: &[Complex64], n: usize, x: f64) -> Complex64 {
    let s = (x - q_min) / dq;
    if s < 0.0 || s > (values.len() - 1) as f64 {
        return Complex64::new(0.0, 0.0);
    }
    let i = (s.floor() as usize).min(values.len().saturating_sub(2));
    let f = s - i as f64;
    node_derivative(values, dq, n, i) * (1.0 - f) + node_derivative(values, dq, n, i + 1) * f
}

/// `W_r(x)`, the alternating Leibniz sum of envelope derivatives.
pub fn wr(env: &Envelope, r: usize, x: f64) -> Result<Complex64> {
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..=r {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += env.derivative(k, x)?.conj() * env.derivative(r - k, x)? * (binomial(r, k) * sign);
    }
    Ok(sum)
}

/// Tolerance and rule size for the one-dimensional integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiControl {
    pub tol: f64,
    pub order: usize,
    pub initial_panels: usize,
    pub max_halvings: usize,
}

impl Default for SemiControl {
    fn default() -> Self {
        SemiControl {
            tol: 1e-12,
            order: 16,
            initial_panels: 16,
            max_halvings: 8,
        }
    }
}

/// Panels on `[a, b]`: `n` uniform ones, plus geometric grading toward any
/// end that touches the branch point.
fn panel_sum<F: Fn(f64) -> Complex64>(
    a: f64,
    b: f64,
    n: usize,
    grade_left: bool,
    grade_right: bool,
    gx: &[f64],
    gw: &[f64],
    f: &F,
) -> Complex64 {
    let rule = |lo: f64, hi: f64| {
        let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        gx.iter().zip(gw).map(|(&x, &w)| f(m + h * x) * w).sum::<Complex64>() * h
    };
    let mut lo = a;
    let mut hi = b;
    let mut total = Complex64::new(0.0, 0.0);
    const LEVELS: i32 = 50;
    let width = (b - a) / n as f64;
    if grade_left {
        let mut d = width;
        for _ in 0..LEVELS {
            total += rule(a + 0.5 * d, a + d);
            d *= 0.5;
        }
        lo = a + width;
    }
    if grade_right {
        let mut d = width;
        for _ in 0..LEVELS {
            total += rule(b - d, b - 0.5 * d);
            d *= 0.5;
        }
        hi = b - width;
    }
    if hi > lo {
        let m = ((hi - lo) / width).round().max(1.0) as usize;
        let w = (hi - lo) / m as f64;
        for k in 0..m {
            total += rule(lo + k as f64 * w, lo + (k + 1) as f64 * w);
        }
    }
    total
}

/// `∫_a^b f` with a breakpoint (graded on both sides) and panel doubling.
///
/// `size(x)` bounds the magnitude of the terms making up `f(x)`; its
/// integral is the scale the refinement change is measured against, so that
/// integrands that cancel identically (odd orders) still converge.
fn integrate_1d<F: Fn(f64) -> Complex64, S: Fn(f64) -> f64>(
    a: f64,
    b: f64,
    breakpoint: Option<f64>,
    ctrl: &SemiControl,
    context: &str,
    f: F,
    size: S,
) -> Result<Complex64> {
    let (gx, gw) = gauss_legendre_unit::<f64>(ctrl.order.max(1));
    let eval = |n: usize| match breakpoint {
        Some(c) if c > a && c < b => {
            let nl = ((n as f64 * (c - a) / (b - a)).ceil() as usize).max(1);
            let nr = ((n as f64 * (b - c) / (b - a)).ceil() as usize).max(1);
            panel_sum(a, c, nl, false, true, &gx, &gw, &f) + panel_sum(c, b, nr, true, false, &gx, &gw, &f)
        }
        _ => panel_sum(a, b, n, false, false, &gx, &gw, &f),
    };
    let scale = {
        let g = |x: f64| Complex64::new(size(x), 0.0);
        panel_sum(a, b, ctrl.initial_panels.max(1) * 4, false, false, &gx, &gw, &g).re
    };
    let mut n = ctrl.initial_panels.max(1);
    let mut prev = eval(n);
    let mut change = f64::INFINITY;
    for _ in 0..ctrl.max_halvings {
        n *= 2;
        let next = eval(n);
        change = (next - prev).norm();
        if change <= ctrl.tol * next.norm().max(scale).max(1e-300) {
            return Ok(next);
        }
        prev = next;
    }
    Err(QtoaError::QuadratureNotConverged {
        context: context.to_string(),
        change: change / prev.norm().max(1e-300),
        tol: ctrl.tol,
    })
}

/// Position `v0² / 2g` of the branch point `2gx/v0² = 1`.
fn branch_point(v0: f64, g: f64) -> Option<f64> {
    (g > 0.0).then(|| v0 * v0 / (2.0 * g))
}

fn branch_warning(window: (f64, f64), v0: f64, g: f64) -> Option<Warning> {
    branch_point(v0, g)
        .filter(|&x| x < window.1)
        .map(|x| Warning::BranchCut { branch_point: x })
}

/// Leading term `(1/v0) ∫ 2F1(1/2, 1; 2; 2gx/v0²) x |ϕ(x)|² dx` for the
/// Gaussian envelope of `spec`, by quadrature over the whole packet.
///
/// Where the packet reaches past the branch point the integrand is taken on
/// `side` of the cut and the result is complex.
pub fn tau0(spec: &WavepacketSpec, params: &PhysicalParams, side: CutSide) -> Result<(Complex64, Vec<Warning>)> {
    tau0_with(&Envelope::gaussian(spec), spec.v0, params, side, &SemiControl::default())
}

/// [`tau0`] for an arbitrary envelope.
pub fn tau0_with(
    env: &Envelope,
    v0: f64,
    params: &PhysicalParams,
    side: CutSide,
    ctrl: &SemiControl,
) -> Result<(Complex64, Vec<Warning>)> {
    if v0 == 0.0 || !v0.is_finite() {
        return Err(QtoaError::invalid("the expansion needs a finite non-zero v0"));
    }
    let g = params.effective().g;
    let (a, b) = env.window();
    let f = |x: f64| {
        let rho = env.derivative(0, x).map(|p| p.norm_sqr()).unwrap_or(0.0);
        hyp2f1_row(0, 2.0 * g * x / (v0 * v0), side) * (x * rho)
    };
    let value = integrate_1d(a, b, branch_point(v0, g), ctrl, "leading-term quadrature", &f, |x| f(x).norm())? / v0;
    Ok((value, branch_warning((a, b), v0, g).into_iter().collect()))
}

/// `(1/√π v0)(i/μv0)^r Γ((r+1)/2)Γ((r+2)/2)/r!`.
fn alpha_prefactor(r: usize, v0: f64, mu: f64) -> Complex64 {
    let rf = r as f64;
    let mut fact = 1.0;
    for k in 2..=r {
        fact *= k as f64;
    }
    let ipow = Complex64::new(0.0, 1.0).powu(r as u32);
    ipow * ((1.0 / (std::f64::consts::PI.sqrt() * v0)) * (mu * v0).powi(-(r as i32)) * gamma((rf + 1.0) / 2.0)
        * gamma((rf + 2.0) / 2.0)
        / fact)
}

/// `α_r` by quadrature of `x 2F1(...) W_r(x)` over the envelope.
///
/// For `r ≥ 2` the row function has a non-integrable singularity at the
/// branch point, so envelopes reaching it are rejected; for `r ≤ 1` the
/// value is computed on `side` of the cut and a warning attached.
pub fn alpha_r_general(
    env: &Envelope,
    r: usize,
    v0: f64,
    params: &PhysicalParams,
    side: CutSide,
    ctrl: &SemiControl,
) -> Result<(Complex64, Vec<Warning>)> {
    if r == 0 {
        return Err(QtoaError::invalid("correction orders start at r = 1"));
    }
    if v0 == 0.0 || !v0.is_finite() {
        return Err(QtoaError::invalid("the expansion needs a finite non-zero v0"));
    }
    let e = params.effective();
    let window = env.window();
    let warning = branch_warning(window, v0, e.g);
    if warning.is_some() && r >= 2 {
        return Err(QtoaError::invalid(format!(
            "order {r} coefficient diverges: the envelope reaches the branch point x = {:.6e}",
            branch_point(v0, e.g).unwrap_or(f64::NAN)
        )));
    }
    // Evaluate W_r once per node; errors (grid order too high) surface first.
    wr(env, r, window.0)?;
    let f = |x: f64| {
        let w = wr(env, r, x).unwrap_or_default();
        hyp2f1_row(r as u32, 2.0 * e.g * x / (v0 * v0), side) * w * x
    };
    let size = |x: f64| {
        let terms: f64 = (0..=r)
            .map(|k| {
                let a = env.derivative(k, x).unwrap_or_default().norm();
                let b = env.derivative(r - k, x).unwrap_or_default().norm();
                binomial(r, k) * a * b
            })
            .sum();
        (hyp2f1_row(r as u32, 2.0 * e.g * x / (v0 * v0), side) * x).norm() * terms
    };
    let integral = integrate_1d(window.0, window.1, branch_point(v0, e.g), ctrl, "correction quadrature", f, size)?;
    Ok((alpha_prefactor(r, v0, e.mass) * integral, warning.into_iter().collect()))
}

/// Narrow-packet closed form
/// `(q0/v0)(−2^{5/2}/4iσμv0)^r Γ((r+1)/2)Γ((r+2)/2) / (Γ((1−r)/2) r!) · 2F1(...; 2gq0/v0²)`,
/// exactly zero for odd `r`.
pub fn alpha_r_gaussian(r: usize, spec: &WavepacketSpec, params: &PhysicalParams, side: CutSide) -> Result<Complex64> {
    if r == 0 {
        return Err(QtoaError::invalid("correction orders start at r = 1"));
    }
    let v0 = spec.v0;
    if v0 == 0.0 || !v0.is_finite() {
        return Err(QtoaError::invalid("the expansion needs a finite non-zero v0"));
    }
    let e = params.effective();
    let rf = r as f64;
    let gamma_ratio = rgamma((1.0 - rf) / 2.0);
    if gamma_ratio == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut fact = 1.0;
    for k in 2..=r {
        fact *= k as f64;
    }
    let base = Complex64::new(-(2f64.powf(2.5)), 0.0) / Complex64::new(0.0, 4.0 * spec.sigma * e.mass * v0);
    let z = 2.0 * e.g * spec.q0 / (v0 * v0);
    let coeff = spec.q0 / v0 * gamma((rf + 1.0) / 2.0) * gamma((rf + 2.0) / 2.0) * gamma_ratio / fact;
    Ok(base.powu(r as u32) * coeff * hyp2f1_row(r as u32, z, side))
}

/// Terms `r = 1..=r_max` of the Gaussian closed-form expansion.
pub fn expansion_terms(
    spec: &WavepacketSpec,
    params: &PhysicalParams,
    r_max: usize,
    side: CutSide,
) -> Result<Vec<ExpansionTerm>> {
    (1..=r_max)
        .map(|r| {
            let a = alpha_r_gaussian(r, spec, params, side)?;
            Ok(ExpansionTerm {
                order: r,
                coefficient: a,
                contribution: a * params.hbar.powi(r as i32),
            })
        })
        .collect()
}

/// Classical term, leading correction and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingExpansion {
    /// `τ₀ = (v0/g)(1 − √(1 − 2gq0/v0²))` at the packet centre.
    pub classical: Complex64,
    /// `(q0 / 4σ²μ²v0³)(1 − 2gq0/v0²)^{−3/2} ħ²`.
    pub correction2: Complex64,
    pub total: Complex64,
    pub side: CutSide,
    pub warnings: Vec<Warning>,
}

/// `τ₀ + (q0 / 4σ²μ²v0³)(1 − 2gq0/v0²)^{−3/2} ħ²` as written, with `τ₀`
/// the narrow-packet leading term. Beyond the turning point both pieces are
/// complex and taken on `side` of the cut.
pub fn leading_expansion(spec: &WavepacketSpec, params: &PhysicalParams, side: CutSide) -> Result<LeadingExpansion> {
    let v0 = spec.v0;
    if v0 == 0.0 || !v0.is_finite() {
        return Err(QtoaError::invalid("the expansion needs a finite non-zero v0"));
    }
    let e = params.effective();
    let classical = if e.g == 0.0 {
        Complex64::new(spec.q0 / v0, 0.0)
    } else {
        let z = 2.0 * e.g * spec.q0 / (v0 * v0);
        hyp2f1_row(0, z, side) * (spec.q0 / v0)
    };
    let z = 2.0 * e.g * spec.q0 / (v0 * v0);
    let correction2 = hyp2f1_row(2, z, side) * (spec.q0 / (4.0 * spec.sigma2() * e.mass * e.mass * v0.powi(3)))
        * (e.hbar * e.hbar);
    let mut warnings = Vec::new();
    if z > 1.0 {
        if let Some(x) = branch_point(v0, e.g) {
            warnings.push(Warning::BranchCut { branch_point: x });
        }
    }
    warnings.extend(spread_warning(spec, params));
    Ok(LeadingExpansion {
        classical,
        correction2,
        total: classical + correction2,
        side,
        warnings,
    })
}
