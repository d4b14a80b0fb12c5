//! Bessel, confluent hypergeometric limit, Hermite and Gamma helpers.

use super::real::Real;

/// Bessel function of the first kind of order one.
///
/// Miller's backward recurrence (normalised through the Neumann sum
/// `J0 + 2 Σ J2k = 1`) for |x| ≤ 25 and the Hankel asymptotic expansion
/// beyond. Both give close to full double precision in absolute terms.
pub fn bessel_j1(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if !x.is_finite() {
        return if x.is_nan() { f64::NAN } else { 0.0 };
    }
    let ax = x.abs();
    let v = if ax < 1e-4 {
        // Two series terms are exact to rounding here.
        let h = ax / 2.0;
        h * (1.0 - h * h / 2.0)
    } else if ax <= 25.0 {
        j1_miller(ax)
    } else {
        j1_hankel(ax)
    };
    // Odd parity: J1(-x) = -J1(x).
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn j1_miller(x: f64) -> f64 {
    // Starting order well above x so that the backward recurrence is
    // dominated by the minimal solution.
    let mut m = (x + 30.0 + 6.0 * x.sqrt()) as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let mut jp1 = 0.0_f64;
    let mut j = 1e-300_f64;
    let mut j1 = 0.0;
    let mut norm = 0.0;
    let two_over_x = 2.0 / x;
    let mut k = m;
    while k > 0 {
        let jm1 = k as f64 * two_over_x * j - jp1;
        jp1 = j;
        j = jm1;
        k -= 1;
        // j now holds J_k (unnormalised)
        if k == 1 {
            j1 = j;
        }
        if k % 2 == 0 && k > 0 {
            norm += 2.0 * j;
        }
        if j.abs() > 1e250 {
            j *= 1e-250;
            jp1 *= 1e-250;
            j1 *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j; // J_0
    j1 / norm
}

fn j1_hankel(x: f64) -> f64 {
    // P and Q series with a_k(1) = Π_{j=1..k} (4 - (2j-1)^2) / (k! 8^k).
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut k = 1usize;
    let mut last = f64::INFINITY;
    loop {
        let odd = (2 * k - 1) as f64;
        term *= (4.0 - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        k += 1;
        if k > 200 {
            break;
        }
    }
    let chi = x - 0.75 * std::f64::consts::PI;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Confluent hypergeometric limit function `0F1(;b;z)`.
///
/// Positive arguments use the (positive-term) power series. For `b = 2` and
/// large negative arguments the Bessel identity
/// `0F1(;2;-w) = J1(2√w)/√w` avoids the catastrophic cancellation of the
/// alternating series.
pub fn hyp0f1(b: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    if z < -4.0 && b == 2.0 {
        let w = -z;
        let s = w.sqrt();
        return bessel_j1(2.0 * s) / s;
    }
    series_0f1(b, z)
}

fn series_0f1(b: f64, z: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 0.0;
    loop {
        term *= z / ((b + k) * (k + 1.0));
        sum += term;
        k += 1.0;
        if term.abs() <= 1e-17 * sum.abs() || k > 5000.0 {
            break;
        }
    }
    sum
}

/// `0F1(;2;z)` for `z ≥ 0` in any [`Real`] precision (positive-term series).
pub fn hyp0f1_2_nonneg<R: Real>(z: R) -> R {
    let mut sum = R::one();
    let mut term = R::one();
    let mut k = 0usize;
    let tol = R::of(R::UNIT_ROUNDOFF * 0.25);
    loop {
        let kk = R::of_usize(k);
        term = term * z / ((kk + R::of(2.0)) * (kk + R::one()));
        sum += term;
        k += 1;
        if term <= tol * sum || k > 20000 {
            break;
        }
    }
    sum
}

/// Physicists' Hermite polynomial `H_n(z)` by the three-term recurrence.
pub fn hermite(n: usize, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut h0 = 1.0;
    let mut h1 = 2.0 * z;
    for k in 1..n {
        let h2 = 2.0 * z * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// Gamma function.
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Reciprocal Gamma function, exactly zero at the poles `0, -1, -2, ...`.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x > 171.0 {
        let (lg, _) = libm::lgamma_r(x);
        return (-lg).exp();
    }
    1.0 / libm::tgamma(x)
}

/// Generalised binomial coefficient `C(1/2, k)` through the Gamma function,
/// `Γ(3/2) / (Γ(k+1) Γ(3/2-k))`; log-Gamma is used once `Γ(k+1)` would
/// overflow.
pub fn binomial_half(k: usize) -> f64 {
    let kf = k as f64;
    if k <= 150 {
        gamma(1.5) * rgamma(kf + 1.0) * rgamma(1.5 - kf)
    } else {
        let (l1, _) = libm::lgamma_r(1.5);
        let (l2, _) = libm::lgamma_r(kf + 1.0);
        let (l3, s3) = libm::lgamma_r(1.5 - kf);
        (l1 - l2 - l3).exp() * s3 as f64
    }
}

/// Ordinary binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    // Every partial product is itself a binomial coefficient, so each step is
    // exact while the values stay below 2^53.
    let mut c = 1.0;
    for j in 0..k {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j1_small_values() {
        assert_eq!(bessel_j1(0.0), 0.0);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert!((bessel_j1(-1.0) + 0.440_050_585_744_933_5).abs() < 1e-15);
    }

    #[test]
    fn binomial_half_leading_terms() {
        assert!((binomial_half(0) - 1.0).abs() < 1e-15);
        assert!((binomial_half(1) - 0.5).abs() < 1e-15);
        assert!((binomial_half(2) + 0.125).abs() < 1e-15);
        assert!((binomial_half(3) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn rgamma_poles() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert!((rgamma(0.5) - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-15);
    }
}
