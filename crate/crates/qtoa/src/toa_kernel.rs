//! Coordinate kernel `⟨q|T|q'⟩` of the Weyl-quantized arrival-time operator.
//!
//! ```text
//! K(q,q') = (μ i/ħ) · (q+q')/2 · sgn(q−q') · ½ · 0F1(; 2; −μ² g (q+q')(q−q')² / 4ħ²)
//! ```
//!
//! The `0F1` form is used throughout: it is entire in its argument, so the
//! square root of a negative `(q+q')` that appears in the Bessel form never
//! has to be chosen. For `q+q' < 0` the argument is positive and the kernel
//! grows like a modified Bessel function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{binomial, binomial_half, hyp0f1};
use crate::params::PhysicalParams;

/// Effective constants entering the kernel (after the mass split).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub mass: f64,
    pub g: f64,
    pub hbar: f64,
}

impl KernelSpec {
    pub fn from_params(params: &PhysicalParams) -> Self {
        let e = params.effective();
        KernelSpec {
            mass: e.mass,
            g: e.g,
            hbar: e.hbar,
        }
    }

    /// Argument of the `0F1` factor.
    #[inline]
    pub fn argument(&self, q: f64, qp: f64) -> f64 {
        let d = q - qp;
        -self.mass * self.mass * self.g * (q + qp) * d * d / (4.0 * self.hbar * self.hbar)
    }

    /// Real symmetric part `S(q,q') = (μ/ħ)(q+q')/2 · ½ · 0F1(...)`, so that
    /// `K = i S sgn(q−q')`.
    #[inline]
    pub fn symmetric_part(&self, q: f64, qp: f64) -> f64 {
        0.25 * self.mass / self.hbar * (q + qp) * hyp0f1(2.0, self.argument(q, qp))
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `⟨q|T|q'⟩`, purely imaginary and finite everywhere (zero on the diagonal).
pub fn kernel_value(q: f64, qp: f64, spec: &KernelSpec) -> Complex64 {
    Complex64::new(0.0, spec.symmetric_part(q, qp) * sgn(q - qp))
}

/// `⟨q|p^{-m}|q'⟩ = (i/2) (−1)^{(m−1)/2} (q−q')^{m−1} sgn(q−q') / (ħ^m (m−1)!)`
/// for odd `m`.
fn inverse_momentum_power(q: f64, qp: f64, m: usize, hbar: f64) -> Complex64 {
    debug_assert!(m % 2 == 1);
    let sign = if ((m - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let mut fact = 1.0;
    for k in 2..m {
        fact *= k as f64;
    }
    let v = 0.5 * sign * (q - qp).powi(m as i32 - 1) * sgn(q - qp) / (hbar.powi(m as i32) * fact);
    Complex64::new(0.0, v)
}

/// Partial sum (terms `n = 0..=n_max`) of the Weyl-ordered series
///
/// ```text
/// 2μ Σ_n C(1/2,n+1) (−2μ²g)ⁿ 2^{−(n+1)} Σ_k C(n+1,k) qᵏ q'^{n+1−k} ⟨q|p^{−2n−1}|q'⟩
/// ```
pub fn weyl_series_kernel(q: f64, qp: f64, spec: &KernelSpec, n_max: usize) -> Complex64 {
    let mu = spec.mass;
    let mut total = Complex64::new(0.0, 0.0);
    for n in 0..=n_max {
        let mut ordered = 0.0;
        for k in 0..=n + 1 {
            ordered += binomial(n + 1, k) * q.powi(k as i32) * qp.powi((n + 1 - k) as i32);
        }
        let coeff = 2.0 * mu * binomial_half(n + 1) * (-2.0 * mu * mu * spec.g).powi(n as i32)
            / 2f64.powi(n as i32 + 1);
        total += inverse_momentum_power(q, qp, 2 * n + 1, spec.hbar) * (coeff * ordered);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> KernelSpec {
        KernelSpec {
            mass: 1.0,
            g: 1.0,
            hbar: 1.0,
        }
    }

    #[test]
    fn diagonal_vanishes() {
        for &q in &[-3.0, 0.0, 2.5] {
            assert_eq!(kernel_value(q, q, &unit()), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn hermitian_and_imaginary() {
        let s = unit();
        for &(q, qp) in &[(1.0, -2.0), (-4.0, -1.5), (0.3, 0.9)] {
            let a = kernel_value(q, qp, &s);
            let b = kernel_value(qp, q, &s);
            assert_eq!(a.re, 0.0);
            assert_eq!(a, b.conj());
        }
    }
}
