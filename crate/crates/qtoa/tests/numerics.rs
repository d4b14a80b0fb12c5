use num_complex::Complex64;
use proptest::prelude::*;
use qtoa::numerics::{
    bessel_j1, binomial, gauss_legendre, hermite, hyp0f1, hyp2f1_row, CutSide,
};

/// Power series `Σ (−1)^k (x/2)^{2k+1} / (k! (k+1)!)`, summed in long form.
fn j1_series(x: f64) -> f64 {
    let h = x / 2.0;
    let mut term = h;
    let mut sum = term;
    for k in 1..200 {
        term *= -h * h / (k as f64 * (k + 1) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

#[test]
fn j1_reference_values() {
    assert_eq!(bessel_j1(0.0), 0.0);
    assert!((bessel_j1(1.0) - 0.4400505857449335).abs() < 1e-15);
    // The alternating series is itself accurate only while its terms stay
    // small, i.e. for moderate x.
    for &x in &[0.1, 0.5, 2.0, 3.0, 5.0, 7.5] {
        let r = j1_series(x);
        assert!((bessel_j1(x) - r).abs() <= 1e-12 * r.abs(), "x={x}");
    }
}

#[test]
fn j1_large_arguments() {
    // 30-digit reference values.
    let table = [
        (10.0, 0.043472746168861437),
        (12.0, -0.22344710449062761),
        (14.5, 0.19342946359604696),
        (20.0, 0.066833124175850046),
        (25.5, -0.062048536491484102),
        (35.0, 0.04399094217962564),
        (42.25, -0.07260056501978104),
        (50.0, -0.097511828125175138),
    ];
    for (x, v) in table {
        let got = bessel_j1(x);
        assert!((got - v).abs() <= 1e-12 * v.abs(), "x={x}: {got} vs {v}");
    }
}

#[test]
fn hyp0f1_values_and_bessel_identity() {
    assert_eq!(hyp0f1(2.0, 0.0), 1.0);
    assert!((hyp0f1(2.0, -1.0) - 0.5767248077568734).abs() < 1e-14);
    let mut worst: f64 = 0.0;
    for k in 1..=2000 {
        let z = 100.0 * k as f64 / 2000.0;
        let lhs = hyp0f1(2.0, -z / 4.0);
        let rhs = 2.0 * bessel_j1(z.sqrt()) / z.sqrt();
        worst = worst.max((lhs - rhs).abs());
    }
    assert!(worst < 1e-12, "identity residual {worst:e}");
}

#[test]
fn hyp0f1_positive_branch_grows() {
    // 0F1(;2;w) = I1(2√w)/√w and I1(2) = 1.5906368546373291.
    assert!((hyp0f1(2.0, 1.0) - 1.5906368546373291).abs() < 1e-14);
    let mut prev = 1.0;
    for k in 1..20 {
        let v = hyp0f1(2.0, k as f64 * 5.0);
        assert!(v > prev);
        prev = v;
    }
}

#[test]
fn classical_row_identity() {
    let mut worst: f64 = 0.0;
    let n = 5991;
    for k in 0..n {
        let z = -5.0 + 5.99 * k as f64 / (n - 1) as f64;
        let v = hyp2f1_row(0, z, CutSide::Below);
        assert_eq!(v.im, 0.0, "z={z}");
        let oracle = 2.0 / (1.0 + (1.0 - z).sqrt());
        worst = worst.max((v.re - oracle).abs() / oracle);
    }
    assert!(worst < 1e-10, "residual {worst:e}");
    assert!((hyp2f1_row(0, 0.5, CutSide::Below).re - 1.1715728752538097).abs() < 1e-13);
}

#[test]
fn rows_are_one_at_origin() {
    for r in 0..10 {
        assert_eq!(hyp2f1_row(r, 0.0, CutSide::Above), Complex64::new(1.0, 0.0));
    }
}

/// Tanh–sinh quadrature of `f` over `[a, b]`; `f` receives the node and
/// its distances to both endpoints (computed without cancellation), so
/// integrable endpoint singularities are handled.
fn tanh_sinh<F: Fn(f64, f64, f64) -> Complex64>(a: f64, b: f64, f: F) -> Complex64 {
    let h = 1.0 / 64.0;
    let half = 0.5 * (b - a);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in -320i32..=320 {
        let t = k as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // 1 ∓ tanh(u) = 2 / (e^{±2u} + 1)
        let to_b = half * 2.0 / ((2.0 * u).exp() + 1.0);
        let to_a = half * 2.0 / ((-2.0 * u).exp() + 1.0);
        if to_a <= 0.0 || to_b <= 0.0 {
            continue;
        }
        let x = if to_a < to_b { a + to_a } else { b - to_b };
        sum += f(x, to_a, to_b) * (half * w * h);
    }
    sum
}

/// Euler integral `∫₀¹ (1 − z t)^{−1/2} dt` of the `r = 0` row (whose
/// Gamma prefactor is 1) for `z > 1`, split at the branch point `t = 1/z`.
fn euler_row0(z: f64, side: CutSide) -> Complex64 {
    let tb = 1.0 / z;
    let below = tanh_sinh(0.0, tb, |_, _, to_b| Complex64::new((z * to_b).powf(-0.5), 0.0));
    // Beyond the branch point 1 − z t = −z (t − 1/z) < 0 and
    // (−x ± i0)^{−1/2} = ∓ i x^{−1/2} for the z ∓ i0 sides.
    let beyond = tanh_sinh(tb, 1.0, |_, to_a, _| Complex64::new((z * to_a).powf(-0.5), 0.0));
    let phase = match side {
        CutSide::Above => Complex64::new(0.0, 1.0),
        CutSide::Below => Complex64::new(0.0, -1.0),
    };
    below + phase * beyond
}

#[test]
fn row_zero_beyond_the_cut_matches_euler_integral() {
    for side in [CutSide::Above, CutSide::Below] {
        let v = hyp2f1_row(0, 2.5, side);
        let oracle = euler_row0(2.5, side);
        assert!((v - oracle).norm() < 1e-12, "{side:?}: {v} vs {oracle}");
    }
    // The two sides are complex conjugates.
    let a = hyp2f1_row(4, 3.0, CutSide::Above);
    let b = hyp2f1_row(4, 3.0, CutSide::Below);
    assert!((a - b.conj()).norm() < 1e-12 * a.norm());
}

/// Power series of `2F1(a, b; c; z)` for |z| < 1.
fn series_2f1(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..5000 {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// 30-digit values of the rows r = 0..7 at z = −0.9 and z = −0.5.
const ROWS_AT_MINUS_0_9: [f64; 8] = [
    0.84089972268671595, 0.6100527775333074, 0.38182960532105877, 0.2009629501689783,
    0.081971729674188518, 0.01809223235593295, -0.0072881664753657024, -0.011469079748327408,
];
const ROWS_AT_MINUS_0_5: [f64; 8] = [
    0.8989794855663562, 0.73401367628909587, 0.54433105395181736, 0.36288736930121157,
    0.21168429875904008, 0.10080204702811433, 0.030240614108434298, -0.006720136468540955,
];

#[test]
fn rows_at_negative_arguments() {
    for r in 0..8u32 {
        for (z, v) in [(-0.9, ROWS_AT_MINUS_0_9[r as usize]), (-0.5, ROWS_AT_MINUS_0_5[r as usize])] {
            let got = hyp2f1_row(r, z, CutSide::Below).re;
            assert!((got - v).abs() < 1e-12 * v.abs(), "r={r} z={z}: {got} vs {v}");
        }
    }
}

#[test]
fn higher_rows_match_series_and_transformations() {
    for r in 0..8u32 {
        let (a, b) = ((r as f64 + 1.0) / 2.0, (r as f64 + 2.0) / 2.0);
        // Positive z: the series has positive terms and is a clean oracle.
        for &z in &[0.1, 0.6, 0.9] {
            let v = hyp2f1_row(r, z, CutSide::Below);
            let s = series_2f1(a, b, 2.0, z);
            assert!((v.re - s).abs() < 1e-10 * s.abs(), "r={r} z={z}: {} vs {s}", v.re);
        }
        // Pfaff: 2F1(a,b;c;z) = (1−z)^{−a} 2F1(a, c−b; c; z/(z−1)).
        for &z in &[-5.0, -3.0, -1.5] {
            let v = hyp2f1_row(r, z, CutSide::Below);
            let s = (1.0 - z).powf(-a) * series_2f1(a, 2.0 - b, 2.0, z / (z - 1.0));
            assert!((v.re - s).abs() < 1e-10 * s.abs(), "r={r} z={z}: {} vs {s}", v.re);
        }
    }
}

#[test]
fn hermite_values_and_addition_theorem() {
    assert_eq!(hermite(0, 0.7), 1.0);
    assert_eq!(hermite(1, 3.0), 6.0);
    let samples = [(0.3, -1.1), (1.7, 0.4), (-2.2, -0.9), (0.0, 2.5)];
    for r in 0..=8usize {
        for &(x, y) in &samples {
            let lhs: f64 = (0..=r)
                .map(|q| binomial(r, q) * hermite(q, x) * hermite(r - q, y))
                .sum();
            let rhs = 2f64.powf(r as f64 / 2.0) * hermite(r, (x + y) / 2f64.sqrt());
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0), "r={r} x={x} y={y}");
        }
    }
}

#[test]
fn hermite_matches_rodrigues_formula() {
    // dⁿ/dzⁿ e^{−z²} = P_n(z) e^{−z²} with P_{n+1} = P_n' − 2z P_n, and
    // H_n = (−1)ⁿ P_n.
    let mut p = vec![1.0f64];
    for n in 0..=6usize {
        for z in [-1.3f64, -0.2, 0.0, 0.8, 2.1] {
            let pz: f64 = p.iter().enumerate().map(|(k, c)| c * z.powi(k as i32)).sum();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((hermite(n, z) - sign * pz).abs() < 1e-10 * pz.abs().max(1.0), "n={n} z={z}");
        }
        let mut next = vec![0.0; p.len() + 1];
        for (k, c) in p.iter().enumerate() {
            if k > 0 {
                next[k - 1] += k as f64 * c;
            }
            next[k + 1] -= 2.0 * c;
        }
        p = next;
    }
}

#[test]
fn gauss_legendre_rules() {
    let one = gauss_legendre(1, -1.0, 1.0).unwrap();
    assert_eq!(one.nodes, vec![0.0]);
    assert_eq!(one.weights, vec![2.0]);
    let two = gauss_legendre(2, -1.0, 1.0).unwrap();
    assert!((two.integrate(|x| x * x) - 2.0 / 3.0).abs() < 1e-15);
    let e = gauss_legendre(20, 0.0, 1.0).unwrap().integrate(f64::exp);
    assert!((e - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    assert!(gauss_legendre(0, 0.0, 1.0).is_err());
    assert!(gauss_legendre(4, 1.0, 1.0).is_err());
    assert!(gauss_legendre(4, 2.0, 1.0).is_err());
}

#[test]
fn gauss_legendre_doubling_is_stable() {
    let f = |x: f64| (3.0 * x).cos() * x.exp() / (9.0 + x * x);
    for n in [20, 24, 32] {
        let a = gauss_legendre(n, -1.0, 2.0).unwrap().integrate(f);
        let b = gauss_legendre(2 * n, -1.0, 2.0).unwrap().integrate(f);
        assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
    }
}

#[test]
fn gauss_legendre_polynomial_exactness() {
    for n in 1..=30usize {
        let rule = gauss_legendre(n, -0.5, 1.5).unwrap();
        let deg = 2 * n - 1;
        let exact = (1.5f64.powi(deg as i32 + 1) - (-0.5f64).powi(deg as i32 + 1)) / (deg + 1) as f64;
        let got = rule.integrate(|x| x.powi(deg as i32));
        assert!((got - exact).abs() < 1e-12 * exact.abs().max(1.0), "n={n}");
    }
}

proptest! {
    #[test]
    fn j1_is_odd(x in -50.0f64..50.0) {
        prop_assert_eq!(bessel_j1(-x), -bessel_j1(x));
    }

    #[test]
    fn j1_within_tolerance_of_series(x in 0.0f64..6.0) {
        let r = j1_series(x);
        prop_assert!((bessel_j1(x) - r).abs() <= 1e-12 * r.abs().max(1e-2));
    }

    #[test]
    fn rows_are_real_below_one(r in 0u32..12, z in -40.0f64..0.9999) {
        for side in [CutSide::Above, CutSide::Below] {
            prop_assert_eq!(hyp2f1_row(r, z, side).im, 0.0);
        }
    }

    #[test]
    fn identity_holds_on_random_points(z in -5.0f64..0.99) {
        let v = hyp2f1_row(0, z, CutSide::Above).re;
        let oracle = 2.0 / (1.0 + (1.0 - z).sqrt());
        prop_assert!((v - oracle).abs() < 1e-10 * oracle);
    }
}
