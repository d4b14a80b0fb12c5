use num_complex::Complex64;
use qtoa::numerics::CutSide;
use qtoa::semiclassical::*;
use qtoa::states::WavepacketSpec;
use qtoa::{PhysicalParams, Warning};

const BELOW: CutSide = CutSide::Below;

fn sec4() -> WavepacketSpec {
    WavepacketSpec::from_variance(-5.0, 0.1, 30.0).unwrap()
}

fn natural() -> PhysicalParams {
    PhysicalParams::natural()
}

fn mass(mu: f64) -> PhysicalParams {
    PhysicalParams::with_mass(1.0, 1.0, mu).unwrap()
}

#[test]
fn wr_low_orders() {
    let s = sec4();
    let env = Envelope::gaussian(&s);
    for x in [-5.7, -5.1, -5.0, -4.6] {
        let phi = env.derivative(0, x).unwrap();
        assert!((wr(&env, 0, x).unwrap() - Complex64::new(phi.norm_sqr(), 0.0)).norm() < 1e-15);
        assert_eq!(wr(&env, 1, x).unwrap(), Complex64::new(0.0, 0.0));
        // For ϕ ∝ e^{−(x−q0)²/4σ²}: ϕ̄''ϕ − 2ϕ̄'ϕ' + ϕ̄ϕ'' = −|ϕ|²/σ².
        let w2 = wr(&env, 2, x).unwrap();
        let expected = -phi.norm_sqr() / s.sigma2();
        assert!((w2.re - expected).abs() < 1e-12 * expected.abs(), "x={x}");
        assert_eq!(w2.im, 0.0);
    }
}

#[test]
fn grid_envelopes_are_limited_to_low_orders() {
    let s = sec4();
    let g = Envelope::gaussian(&s);
    let (a, b) = g.window();
    let n = 4001;
    let dq = (b - a) / (n - 1) as f64;
    let values = (0..n).map(|k| g.derivative(0, a + dq * k as f64).unwrap()).collect();
    let grid = Envelope::Grid { q_min: a, dq, values };
    // Finite differences agree with the closed form for r ≤ 4.
    for r in 0..=4 {
        let x = -5.13;
        let exact = wr(&g, r, x).unwrap();
        let fd = wr(&grid, r, x).unwrap();
        assert!((exact - fd).norm() < 1e-3 * exact.norm().max(1e-3), "r={r}: {fd} vs {exact}");
    }
    assert!(wr(&grid, 5, -5.0).is_err());
}

#[test]
fn leading_term_examples() {
    let narrow = WavepacketSpec::from_variance(-5.0, 1e-4, 30.0).unwrap();
    let (t, w) = tau0(&narrow, &natural(), BELOW).unwrap();
    assert!(w.is_empty());
    assert_eq!(t.im, 0.0);
    assert!((t.re - -0.166206).abs() < 1e-6);
    let origin = WavepacketSpec::from_variance(0.0, 1e-6, 30.0).unwrap();
    assert!(tau0(&origin, &natural(), BELOW).unwrap().0.norm() < 1e-6);
    let (t, _) = tau0(&sec4(), &natural(), BELOW).unwrap();
    assert!((t.re - -0.1662044).abs() < 1e-7);
}

#[test]
fn leading_term_beyond_the_turning_point() {
    let s = WavepacketSpec::from_variance(5.0, 0.1, 2.0).unwrap();
    let (t, w) = tau0(&s, &natural(), BELOW).unwrap();
    assert!((t.re - 2.0).abs() < 1e-6, "{t}");
    // The Gaussian average of the cut values of the classical term.
    assert!((t.im - -2.44605).abs() < 1e-4, "{t}");
    assert!(w.iter().any(|w| matches!(w, Warning::BranchCut { .. })));
    let (up, _) = tau0(&s, &natural(), CutSide::Above).unwrap();
    assert!((up - t.conj()).norm() < 1e-10);
}

#[test]
fn odd_orders_vanish() {
    for r in [1, 3, 5, 7] {
        assert_eq!(alpha_r_gaussian(r, &sec4(), &natural(), BELOW).unwrap(), Complex64::new(0.0, 0.0));
    }
    let env = Envelope::gaussian(&sec4());
    for r in [1, 3] {
        let (a, _) = alpha_r_general(&env, r, 30.0, &natural(), BELOW, &SemiControl::default()).unwrap();
        assert!(a.norm() < 1e-12, "r={r}: {a}");
    }
}

#[test]
fn general_route_matches_closed_form_on_narrow_packets() {
    let narrow = WavepacketSpec::from_variance(-5.0, 1e-4, 30.0).unwrap();
    let env = Envelope::gaussian(&narrow);
    for r in [2, 4] {
        let (a, _) = alpha_r_general(&env, r, 30.0, &natural(), BELOW, &SemiControl::default()).unwrap();
        let b = alpha_r_gaussian(r, &narrow, &natural(), BELOW).unwrap();
        assert!((a - b).norm() < 1e-6 * b.norm(), "r={r}: {a} vs {b}");
    }
    // At σ² = 0.1 the closed form (which evaluates the hypergeometric factor
    // at the packet centre) and the packet average differ at O(σ²).
    let env = Envelope::gaussian(&sec4());
    let (a, _) = alpha_r_general(&env, 2, 30.0, &natural(), BELOW, &SemiControl::default()).unwrap();
    let b = alpha_r_gaussian(2, &sec4(), &natural(), BELOW).unwrap();
    assert!((a.re - -4.55323e-4).abs() < 1e-9);
    assert!((b.re - -4.55353e-4).abs() < 1e-9);
    assert!((a - b).norm() < 1e-4 * b.norm());
}

#[test]
fn second_order_scales_like_inverse_mass_squared() {
    let env = Envelope::gaussian(&sec4());
    let ctrl = SemiControl::default();
    let base = alpha_r_general(&env, 2, 30.0, &mass(1.0), BELOW, &ctrl).unwrap().0;
    for mu in [2.0, 4.0] {
        let a = alpha_r_general(&env, 2, 30.0, &mass(mu), BELOW, &ctrl).unwrap().0;
        assert!((a * (mu * mu) - base).norm() < 1e-10 * base.norm(), "mu={mu}");
    }
}

#[test]
fn general_route_refuses_the_cut_for_corrections() {
    let s = WavepacketSpec::from_variance(5.0, 0.1, 2.0).unwrap();
    let env = Envelope::gaussian(&s);
    assert!(alpha_r_general(&env, 2, 2.0, &natural(), BELOW, &SemiControl::default()).is_err());
}

#[test]
fn closed_form_second_order_is_the_printed_correction() {
    for (q0, v0, s2, mu) in [(-5.0, 30.0, 0.1, 1.0), (3.0, 10.0, 0.4, 2.0), (-1.0, 4.0, 0.02, 0.5)] {
        let s = WavepacketSpec::from_variance(q0, s2, v0).unwrap();
        let p = mass(mu);
        let a2 = alpha_r_gaussian(2, &s, &p, BELOW).unwrap();
        let le = leading_expansion(&s, &p, BELOW).unwrap();
        assert!((a2 - le.correction2).norm() < 1e-12 * a2.norm());
    }
}

#[test]
fn expansion_at_reference_parameters() {
    let le = leading_expansion(&sec4(), &natural(), BELOW).unwrap();
    assert!(le.warnings.is_empty());
    assert!((le.classical.re.abs() - 0.166206).abs() < 1e-6);
    assert!((le.correction2.norm() - 0.000455).abs() < 1e-6);
    assert!((le.classical.norm() + le.correction2.norm() - 0.166662).abs() < 2e-6);
    assert!((le.total.norm() - 0.166661).abs() < 2e-6);
    // The correction pushes the arrival time away from zero.
    assert!(le.total.norm() > le.classical.norm());
    let terms = expansion_terms(&sec4(), &natural(), 4, BELOW).unwrap();
    assert_eq!(terms.len(), 4);
    assert_eq!(terms[0].contribution, Complex64::new(0.0, 0.0));
    assert!((terms[1].contribution - le.correction2).norm() < 1e-14 * le.correction2.norm());
}

#[test]
fn expansion_in_the_tunneling_regime() {
    let s = WavepacketSpec::from_variance(5.0, 0.1, 2.0).unwrap();
    let le = leading_expansion(&s, &natural(), BELOW).unwrap();
    assert!((le.total.re - 2.0).abs() < 1e-6);
    assert!((le.total.im - -1.598972).abs() < 1e-3, "{}", le.total);
    assert!(le.warnings.iter().any(|w| matches!(w, Warning::BranchCut { .. })));
    assert!(le.warnings.iter().any(|w| matches!(w, Warning::SpreadBound { .. })));
    let above = leading_expansion(&s, &natural(), CutSide::Above).unwrap();
    assert!((above.total - le.total.conj()).norm() < 1e-12);
}

#[test]
fn spread_warning_follows_the_bound() {
    // bound v0²/g − 2q0 = 16 − 2 q0 against σ = 1.
    for (q0, warned) in [(7.0, false), (7.6, true), (-3.0, false)] {
        let s = WavepacketSpec::new(q0, 1.0, 4.0).unwrap();
        let le = leading_expansion(&s, &natural(), BELOW).unwrap();
        let has = le.warnings.iter().any(|w| matches!(w, Warning::SpreadBound { .. }));
        assert_eq!(has, warned, "q0={q0}");
    }
}

#[test]
fn mass_split_identity_and_definition() {
    let p = natural();
    let same = with_mass_split(&p, 1.0, 1.0).unwrap();
    assert_eq!(
        alpha_r_gaussian(2, &sec4(), &same, BELOW).unwrap(),
        alpha_r_gaussian(2, &sec4(), &p, BELOW).unwrap()
    );
    let split = with_mass_split(&p, 2.0, 3.0).unwrap();
    let direct = PhysicalParams::with_mass(1.0, 3.0 / 2.0, 2.0).unwrap();
    let a = alpha_r_gaussian(2, &sec4(), &split, BELOW).unwrap();
    let b = alpha_r_gaussian(2, &sec4(), &direct, BELOW).unwrap();
    assert!((a - b).norm() < 1e-15 * a.norm());
}

fn alpha2(q0: f64, s2: f64, v0: f64, p: &PhysicalParams) -> f64 {
    let s = WavepacketSpec::from_variance(q0, s2, v0).unwrap();
    leading_expansion(&s, p, BELOW).unwrap().correction2.norm()
}

#[test]
fn correction_trends() {
    for mu in [1.0, 2.0, 3.0] {
        let p = mass(mu);
        let v: Vec<f64> = [20.0, 30.0, 40.0].iter().map(|&v0| alpha2(-5.0, 0.1, v0, &p)).collect();
        assert!(v[0] > v[1] && v[1] > v[2], "v0 trend at mu={mu}: {v:?}");
        let s: Vec<f64> = [0.05, 0.1, 0.2].iter().map(|&s2| alpha2(-5.0, s2, 30.0, &p)).collect();
        assert!(s[0] > s[1] && s[1] > s[2], "sigma trend at mu={mu}: {s:?}");
        // Turning point v0²/2g = 450 above the launch point.
        let q: Vec<f64> = [100.0, 300.0, 440.0].iter().map(|&q0| alpha2(q0, 0.1, 30.0, &p)).collect();
        assert!(q[0] < q[1] && q[1] < q[2], "turning-point trend at mu={mu}: {q:?}");
    }
    // Very wide packets carry almost no correction.
    assert!(alpha2(-5.0, 1e4, 30.0, &natural()) < 1e-8);
}

#[test]
fn lighter_gravitational_response_is_not_symmetric() {
    // m_i/m_g ∈ {0.5, 1, 2} at fixed m_i: the ratio below one moves α₂ more.
    let p = natural();
    let at = |ratio: f64| {
        let split = with_mass_split(&p, 1.0, 1.0 / ratio).unwrap();
        alpha2(-5.0, 0.1, 30.0, &split)
    };
    let (low, mid, high) = (at(0.5), at(1.0), at(2.0));
    assert!((low - mid).abs() > (high - mid).abs(), "{low} {mid} {high}");
}

#[test]
fn caesium_scale_correction() {
    // ¹³³Cs (2.207e-25 kg) launched upward at 10 m/s from one metre below the
    // arrival point with a 1 mm spread, ħ = 1.05e-34 J s, g = 9.8 m/s².
    let p = PhysicalParams::with_mass(1.05e-34, 9.8, 2.207e-25).unwrap();
    let s = WavepacketSpec::new(-1.0, 1e-3, 10.0).unwrap();
    let le = leading_expansion(&s, &p, BELOW).unwrap();
    assert!(le.warnings.is_empty());
    assert!((le.correction2.norm() - 4.3263054e-17).abs() < 1e-24);
    assert!((le.classical.re - -0.0955284175).abs() < 1e-9);
}
