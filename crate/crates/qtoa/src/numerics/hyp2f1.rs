//! The Gauss hypergeometric row `2F1((r+1)/2, (r+2)/2; 2; z)` on the real
//! line, including the cut `[1, ∞)`.
//!
//! Strategy by region (all real arithmetic except the cut powers):
//!
//! | region          | method                                     |
//! |-----------------|--------------------------------------------|
//! | z < -2          | `z → 1/z` connection formula               |
//! | -2 ≤ z < 0      | Pfaff transformation to `z/(z-1) ∈ (0,2/3]` |
//! | 0 ≤ z ≤ 0.75    | Maclaurin series                           |
//! | 0.75 < z ≤ 1.5  | `z → 1-z` connection formula               |
//! | z > 1.5         | `z → 1/z` connection formula               |
//!
//! For this row `b - a = 1/2` and `c - a - b = 1/2 - r`, so neither
//! connection formula is degenerate (no logarithmic cases).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::special::{gamma, rgamma};

/// Side of the branch cut `[1, ∞)` from which values on the cut are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutSide {
    /// Limit `z + i0` from the upper half-plane.
    Above,
    /// Limit `z - i0` from the lower half-plane.
    Below,
}

impl CutSide {
    /// Argument of `-1` reached when `1 - z` (or `-z`) crosses onto the
    /// negative axis from this side: `z + i0` puts `1 - z` at `arg = -π`.
    fn negative_axis_arg(self) -> f64 {
        match self {
            CutSide::Above => -std::f64::consts::PI,
            CutSide::Below => std::f64::consts::PI,
        }
    }

    /// Human-readable label recorded in run manifests.
    pub fn label(self) -> &'static str {
        match self {
            CutSide::Above => "z+i0",
            CutSide::Below => "z-i0",
        }
    }
}

impl Default for CutSide {
    fn default() -> Self {
        CutSide::Below
    }
}

/// `2F1((r+1)/2, (r+2)/2; 2; z)` for real `z`.
///
/// The result is exactly real (zero imaginary part) for `z ≤ 1`. At `z = 1`
/// the Gauss sum is returned when it converges (`r = 0`); for `r ≥ 1` the
/// function diverges to `+∞` there and `+∞` is returned (see
/// [`row_is_singular_at`]).
pub fn hyp2f1_row(r: u32, z: f64, side: CutSide) -> Complex64 {
    let a = (r as f64 + 1.0) / 2.0;
    let b = (r as f64 + 2.0) / 2.0;
    let c = 2.0;
    hyp2f1_real(a, b, c, z, side)
}

/// True when the row value at `z` is the divergent branch-point limit.
pub fn row_is_singular_at(r: u32, z: f64) -> bool {
    z == 1.0 && r >= 1
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Maclaurin series, valid for |z| < 1.
fn series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 0.0;
    while k < 20000.0 {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        k += 1.0;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Signed-power helper `x^p` for real `x`, taking `arg(x) = theta` when
/// `x < 0`.
fn cut_pow(x: f64, p: f64, theta: f64) -> Complex64 {
    if x >= 0.0 {
        real(x.powf(p))
    } else {
        Complex64::from_polar((-x).powf(p), p * theta)
    }
}

fn hyp2f1_real(a: f64, b: f64, c: f64, z: f64, side: CutSide) -> Complex64 {
    if z == 0.0 {
        return real(1.0);
    }
    if z == 1.0 {
        let s = c - a - b;
        return if s > 0.0 {
            real(gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b))
        } else {
            real(f64::INFINITY)
        };
    }
    let theta = side.negative_axis_arg();
    if z < -2.0 || z > 1.5 {
        return inverse_z(a, b, c, z, theta);
    }
    if z < 0.0 {
        let w = z / (z - 1.0);
        return real((1.0 - z).powf(-a) * series(a, c - b, c, w));
    }
    if z <= 0.75 {
        return real(series(a, b, c, z));
    }
    one_minus_z(a, b, c, z, theta)
}

fn one_minus_z(a: f64, b: f64, c: f64, z: f64, theta: f64) -> Complex64 {
    let w = 1.0 - z;
    let s = c - a - b;
    let ca = gamma(c) * gamma(s) * rgamma(c - a) * rgamma(c - b);
    let cb = gamma(c) * gamma(-s) * rgamma(a) * rgamma(b);
    let f1 = series(a, b, 1.0 - s, w);
    let f2 = series(c - a, c - b, 1.0 + s, w);
    let v = real(ca * f1) + cut_pow(w, s, theta) * (cb * f2);
    if z < 1.0 {
        real(v.re)
    } else {
        v
    }
}

fn inverse_z(a: f64, b: f64, c: f64, z: f64, theta: f64) -> Complex64 {
    let w = 1.0 / z;
    let c1 = gamma(c) * gamma(b - a) * rgamma(b) * rgamma(c - a);
    let c2 = gamma(c) * gamma(a - b) * rgamma(a) * rgamma(c - b);
    let t1 = if c1 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        cut_pow(-z, -a, theta) * (c1 * series(a, a - c + 1.0, a - b + 1.0, w))
    };
    let t2 = if c2 == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        cut_pow(-z, -b, theta) * (c2 * series(b, b - c + 1.0, b - a + 1.0, w))
    };
    let v = t1 + t2;
    if z < 0.0 {
        real(v.re)
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classical_identity(z: f64) -> f64 {
        2.0 / (1.0 + (1.0 - z).sqrt())
    }

    #[test]
    fn row_zero_matches_closed_form_below_one() {
        for &z in &[-50.0, -5.0, -2.0, -1.9, -0.3, 0.0, 0.3, 0.75, 0.8, 0.99] {
            let v = hyp2f1_row(0, z, CutSide::Above);
            assert_eq!(v.im, 0.0);
            assert!((v.re - classical_identity(z)).abs() < 1e-13, "z={z}");
        }
    }

    #[test]
    fn row_two_is_a_pure_power() {
        // b = c collapses the row to (1-z)^(-3/2).
        for &z in &[-7.0, -1.0, 0.5, 0.9, 1.2, 3.0, 10.0] {
            for side in [CutSide::Above, CutSide::Below] {
                let v = hyp2f1_row(2, z, side);
                let w = Complex64::new(1.0 - z, 0.0);
                let sign = if side == CutSide::Above { -1.0 } else { 1.0 };
                let expected = if z < 1.0 {
                    w.powf(-1.5)
                } else {
                    Complex64::from_polar((z - 1.0).powf(-1.5), -1.5 * sign * std::f64::consts::PI)
                };
                assert!((v - expected).norm() < 1e-12 * expected.norm(), "z={z}");
            }
        }
    }

    #[test]
    fn gauss_sum_at_one() {
        assert!((hyp2f1_row(0, 1.0, CutSide::Above).re - 2.0).abs() < 1e-14);
        assert!(hyp2f1_row(3, 1.0, CutSide::Above).re.is_infinite());
        assert!(row_is_singular_at(3, 1.0));
    }
}
