//! Gauss–Legendre rules and panel (composite) rules for oscillatory
//! integrands.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::real::Real;
use crate::error::{QtoaError, Result};

/// A quadrature rule on a finite interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn integrate_complex<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// ascending, in precision `R`.
///
/// Roots are polished by Newton's method on the three-term recurrence, first
/// in `f64` and then (for wider types) in `R`. The rule is made exactly
/// symmetric by mirroring.
pub fn gauss_legendre_unit<R: Real>(n: usize) -> (Vec<R>, Vec<R>) {
    assert!(n >= 1);
    let mut x = vec![R::zero(); n];
    let mut w = vec![R::zero(); n];
    let half = n / 2;
    for i in 0..half {
        // i-th root from the top, Tricomi-style initial guess.
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5);
        let nf = n as f64;
        let mut r = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative::<f64>(n, r);
            let dx = p / dp;
            r -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let mut rr = R::of(r);
        let extra_steps = if R::UNIT_ROUNDOFF < 1e-20 { 3 } else { 1 };
        for _ in 0..extra_steps {
            let (p, dp) = legendre_and_derivative::<R>(n, rr);
            rr -= p / dp;
        }
        let (_, dp) = legendre_and_derivative::<R>(n, rr);
        let wi = R::of(2.0) / ((R::one() - rr * rr) * dp * dp);
        x[n - 1 - i] = rr;
        w[n - 1 - i] = wi;
        x[i] = -rr;
        w[i] = wi;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre_and_derivative::<R>(n, R::zero());
        x[half] = R::zero();
        w[half] = R::of(2.0) / (dp * dp);
    }
    (x, w)
}

/// `(P_n(x), P_n'(x))` by the Bonnet recurrence.
pub fn legendre_and_derivative<R: Real>(n: usize, x: R) -> (R, R) {
    let mut p0 = R::one();
    let mut p1 = x;
    if n == 0 {
        return (R::one(), R::zero());
    }
    for k in 2..=n {
        let kf = R::of_usize(k);
        let p2 = ((R::of_usize(2 * k - 1)) * x * p1 - (kf - R::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = R::of_usize(n);
    let dp = nf * (x * p1 - p0) / (x * x - R::one());
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule mapped to `(a, b)`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(QtoaError::invalid("gauss_legendre needs at least one node"));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(QtoaError::invalid(format!(
            "gauss_legendre needs a finite interval with a < b, got ({a}, {b})"
        )));
    }
    let (x, w) = gauss_legendre_unit::<f64>(n);
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    Ok(QuadratureRule {
        nodes: x.iter().map(|&t| m + h * t).collect(),
        weights: w.iter().map(|&v| h * v).collect(),
        interval: (a, b),
    })
}

/// Composite rule: `panels` equal panels, each with an `order`-point
/// Gauss–Legendre rule.
pub fn composite_gauss_legendre(
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
) -> Result<QuadratureRule> {
    if panels == 0 {
        return Err(QtoaError::invalid("composite rule needs at least one panel"));
    }
    let base = gauss_legendre(order, -1.0, 1.0)?;
    if !(a < b) {
        return Err(QtoaError::invalid(format!(
            "composite rule needs a < b, got ({a}, {b})"
        )));
    }
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let m = lo + 0.5 * width;
        for (&t, &w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(m + 0.5 * width * t);
            weights.push(0.5 * width * w);
        }
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        interval: (a, b),
    })
}

/// Number of panels so that each is at most a quarter period of a phase
/// `e^{i k x}` with `k = max_rate`, and at most `max_width` wide.
pub fn oscillatory_panel_count(a: f64, b: f64, max_rate: f64, max_width: f64) -> usize {
    let quarter = if max_rate > 0.0 {
        0.5 * std::f64::consts::PI / max_rate
    } else {
        f64::INFINITY
    };
    let width = quarter.min(max_width).max(1e-300);
    (((b - a) / width).ceil() as usize).max(1)
}

/// Composite rule whose panel width never exceeds a quarter period of the
/// fastest phase (`max_rate`, radians per unit length) nor `max_width`.
pub fn oscillatory_rule(
    a: f64,
    b: f64,
    max_rate: f64,
    max_width: f64,
    order: usize,
) -> Result<QuadratureRule> {
    let panels = oscillatory_panel_count(a, b, max_rate, max_width);
    composite_gauss_legendre(a, b, panels, order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::real::DoubleDouble;

    #[test]
    fn single_node_rule() {
        let r = gauss_legendre(1, -1.0, 1.0).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_eq!(r.weights, vec![2.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(gauss_legendre(0, 0.0, 1.0).is_err());
        assert!(gauss_legendre(3, 1.0, 1.0).is_err());
        assert!(gauss_legendre(3, 2.0, 1.0).is_err());
    }

    #[test]
    fn double_double_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit::<DoubleDouble>(40);
        let mut s = DoubleDouble::of(0.0);
        for (xi, wi) in x.iter().zip(&w) {
            s += *wi * xi.powi(78);
        }
        let exact = DoubleDouble::of(2.0) / DoubleDouble::of(79.0);
        let err = (s - exact).abs().as_f64();
        let wsum = w.iter().fold(DoubleDouble::of(0.0), |acc, v| acc + *v);
        assert!((wsum - DoubleDouble::of(2.0)).abs().as_f64() < 1e-30);
        assert!(err < 1e-29);
    }

    #[test]
    fn panel_count_respects_quarter_period() {
        let n = oscillatory_panel_count(0.0, 1.0, 30.0, 10.0);
        let width = 1.0 / n as f64;
        assert!(width <= 0.5 * std::f64::consts::PI / 30.0);
    }
}
