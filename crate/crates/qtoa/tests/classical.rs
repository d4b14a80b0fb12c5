use proptest::prelude::*;
use qtoa::classical::{
    classical_toa, spread_ok, spread_warning, toa_series_partial, turning_point, ArrivalBranch,
};
use qtoa::states::WavepacketSpec;
use qtoa::{PhysicalParams, Warning};

fn natural() -> PhysicalParams {
    PhysicalParams::natural()
}

/// Smaller root of `(g/2) t² − v0 t + q0 = 0` by the quadratic formula.
fn quadratic_root(g: f64, q0: f64, v0: f64) -> f64 {
    (v0 - (v0 * v0 - 2.0 * g * q0).sqrt()) / g
}

#[test]
fn first_branch_examples() {
    let p = natural();
    assert_eq!(classical_toa(&p, 0.0, 7.0, ArrivalBranch::First).unwrap().re, 0.0);
    let up = classical_toa(&p, 5.0, 30.0, ArrivalBranch::First).unwrap();
    assert_eq!(up.im, 0.0);
    assert!((up.re - quadratic_root(1.0, 5.0, 30.0)).abs() < 1e-13);
    assert!((up.re - 0.16713222).abs() < 5e-9);
    let down = classical_toa(&p, -5.0, 30.0, ArrivalBranch::First).unwrap();
    assert!((down.re - -0.16620626).abs() < 5e-9);
    // The magnitude is the classical reference value 0.166206.
    assert!((down.re.abs() - 0.166206).abs() < 1e-6);
}

#[test]
fn beyond_the_turning_point_is_complex() {
    let p = natural();
    let t = classical_toa(&p, 5.0, 2.0, ArrivalBranch::First).unwrap();
    assert_eq!(t.re, 2.0);
    assert!((t.im - -(1.5f64).sqrt() * 2.0).abs() < 1e-14);
    assert!(t.im != 0.0);
    let t2 = classical_toa(&p, 5.0, 2.0, ArrivalBranch::Second).unwrap();
    assert!((t2 - t.conj()).norm() < 1e-14);
}

#[test]
fn zero_velocity_is_rejected() {
    assert!(classical_toa(&natural(), 1.0, 0.0, ArrivalBranch::First).is_err());
    assert!(toa_series_partial(&natural(), 1.0, 0.0, 3).is_err());
}

#[test]
fn series_converges_to_first_branch() {
    let p = natural();
    let exact = classical_toa(&p, 5.0, 30.0, ArrivalBranch::First).unwrap().re;
    let (s, w) = toa_series_partial(&p, 5.0, 30.0, 40).unwrap();
    assert!(w.is_none());
    assert!((s - exact).abs() < 1e-10);
    // Error shrinks with every additional term once inside the region.
    let mut prev = f64::INFINITY;
    for n in 2..20 {
        let err = (toa_series_partial(&p, 5.0, 30.0, n).unwrap().0 - exact).abs();
        assert!(err < prev || err < 1e-16, "n={n}");
        prev = err;
    }
}

#[test]
fn free_series_and_leading_term() {
    let free = natural().with_g(0.0);
    for n in [1, 5, 30] {
        let (s, _) = toa_series_partial(&free, 3.0, 2.0, n).unwrap();
        assert!((s - 1.5).abs() < 1e-15);
    }
    let p = PhysicalParams::with_mass(1.0, 1.0, 2.0).unwrap();
    let (s, _) = toa_series_partial(&p, 4.0, 10.0, 0).unwrap();
    assert!((s - 2.0 * 4.0 / 10.0).abs() < 1e-15);
}

#[test]
fn series_warns_outside_convergence_region() {
    let (_, w) = toa_series_partial(&natural(), 5.0, 2.0, 10).unwrap();
    assert!(matches!(w, Some(Warning::SeriesDivergent { .. })));
}

#[test]
fn spread_bound_examples() {
    let p = natural();
    assert_eq!(turning_point(30.0, 1.0), 450.0);
    let ok = spread_ok(&WavepacketSpec::from_variance(5.0, 0.1, 30.0).unwrap(), &p);
    assert!(ok.ok);
    assert!((ok.margin - (900.0 - 10.0 - 0.1f64.sqrt())).abs() < 1e-12);
    assert!((ok.margin - 889.68).abs() < 5e-3);
    let tunnel = WavepacketSpec::from_variance(5.0, 0.1, 2.0).unwrap();
    let bad = spread_ok(&tunnel, &p);
    assert!(!bad.ok);
    assert_eq!(bad.bound, -6.0);
    assert!(matches!(spread_warning(&tunnel, &p), Some(Warning::SpreadBound { .. })));
    // A point-like packet is fine whenever v0²/g > 2 q0.
    let point = WavepacketSpec::new(5.0, 1e-300, 4.0).unwrap();
    assert!(spread_ok(&point, &p).ok);
}

proptest! {
    #[test]
    fn below_turning_point_roots_are_real_and_ordered(q0 in 0.01f64..50.0, v0 in 1.0f64..40.0, g in 0.1f64..5.0) {
        prop_assume!(2.0 * g * q0 / (v0 * v0) < 0.999);
        let p = PhysicalParams::natural().with_g(g);
        let a = classical_toa(&p, q0, v0, ArrivalBranch::First).unwrap();
        let b = classical_toa(&p, q0, v0, ArrivalBranch::Second).unwrap();
        prop_assert_eq!(a.im, 0.0);
        prop_assert_eq!(b.im, 0.0);
        prop_assert!(0.0 < a.re && a.re < b.re);
    }

    #[test]
    fn above_turning_point_is_non_arrival(q0 in 0.01f64..50.0, v0 in 0.1f64..10.0) {
        prop_assume!(2.0 * q0 / (v0 * v0) > 1.001);
        let a = classical_toa(&natural(), q0, v0, ArrivalBranch::First).unwrap();
        prop_assert!(a.im != 0.0);
    }

    #[test]
    fn warning_exactly_when_bound_violated(q0 in -10.0f64..10.0, v0 in 0.5f64..10.0, s in 0.01f64..5.0) {
        let spec = WavepacketSpec::new(q0, s, v0).unwrap();
        let bound = v0 * v0 - 2.0 * q0;
        let warned = spread_warning(&spec, &natural()).is_some();
        prop_assert_eq!(warned, s >= bound);
    }
}
