use nalgebra::DMatrix;
use num_complex::Complex64;
use qtoa::numerics::eigen::skew_eigen;
use qtoa::numerics::{DoubleDouble, Precision};
use qtoa::spectral::*;
use qtoa::states::{gaussian, WavepacketSpec};
use qtoa::toa_kernel::{kernel_value, KernelSpec};
use qtoa::{PhysicalParams, QtoaError};

fn unit() -> KernelSpec {
    KernelSpec::from_params(&PhysicalParams::natural())
}

fn loose() -> DiscretizeOptions {
    DiscretizeOptions {
        tol: 1e-4,
        ..Default::default()
    }
}

fn sec4() -> WavepacketSpec {
    WavepacketSpec::from_variance(-5.0, 0.1, 30.0).unwrap()
}

/// Deterministic antisymmetric test matrix, row-major.
fn test_matrix(n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = ((7 * i + 3 * j) as f64).sin() + 0.1 * (i as f64 - j as f64);
            a[i * n + j] = v;
            a[j * n + i] = -v;
        }
    }
    a
}

#[test]
fn matrix_is_hermitian() {
    for (l, n) in [(1.0, 256), (suggested_box(&sec4()), 512)] {
        let d = discretize(&unit(), l, n, &loose()).unwrap();
        assert_eq!(d.precision, Precision::Double);
        assert!(d.hermiticity_residual() <= 1e-13, "l={l}");
        for (i, j) in [(0, 1), (17, 200), (255, 3)] {
            assert_eq!(d.entry(i, j), d.entry(j, i).conj());
            assert_eq!(d.entry(i, j).re, 0.0);
        }
    }
}

#[test]
fn nystrom_entries_are_weighted_kernel_values() {
    let k = KernelSpec::from_params(&PhysicalParams::with_mass(1.0, 2.0, 1.5).unwrap());
    let opts = DiscretizeOptions {
        scheme: Scheme::Nystrom,
        ..loose()
    };
    let d = discretize(&k, 1.5, 64, &opts).unwrap();
    let (q, w) = (&d.rule.nodes, &d.rule.weights);
    for (i, j) in [(0, 5), (10, 40), (63, 62), (31, 32)] {
        let expected = kernel_value(q[i], q[j], &k) * (w[i] * w[j]).sqrt();
        assert!((d.entry(i, j) - expected).norm() < 1e-13 * expected.norm().max(1e-3));
    }
}

#[test]
fn spectrum_comes_in_opposite_pairs() {
    for g in [0.0, 1.0] {
        let k = KernelSpec::from_params(&PhysicalParams::natural().with_g(g));
        let s = eigensystem(&discretize(&k, 2.0, 128, &loose()).unwrap()).unwrap();
        let mut pos: Vec<f64> = s.values.iter().cloned().filter(|v| *v > 0.0).collect();
        let mut neg: Vec<f64> = s.values.iter().cloned().filter(|v| *v < 0.0).map(|v| -v).collect();
        assert_eq!(pos.len(), neg.len());
        pos.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        let top = pos[pos.len() - 1];
        for (a, b) in pos.iter().zip(&neg) {
            assert!((a - b).abs() < 1e-12 * top, "g={g}: {a} vs {b}");
        }
        // Ordered by magnitude.
        assert!(s.values.windows(2).all(|w| w[0].abs() <= w[1].abs()));
    }
}

#[test]
fn eigenvectors_are_orthonormal_and_complete() {
    let p = PhysicalParams::natural();
    let d = discretize(&unit(), suggested_box(&sec4()), 512, &loose()).unwrap();
    let s = eigensystem(&d).unwrap();
    assert!(s.orthonormality_residual() <= 1e-10);
    let m = spectral_expectation(&s, &gaussian(&sec4(), &p));
    assert!((m.weight - 1.0).abs() < 1e-9, "{}", m.weight);
}

#[test]
fn spectral_mean_matches_direct_quadrature() {
    let p = PhysicalParams::natural();
    let s = eigensystem(&discretize(&unit(), suggested_box(&sec4()), 256, &loose()).unwrap()).unwrap();
    let m = spectral_expectation(&s, &gaussian(&sec4(), &p));
    let exact = -0.16666351095;
    assert!((m.mean - exact).abs() <= 1e-3 * exact.abs());
    assert!((m.mean - exact).abs() <= 1e-9);
    // Little cancellation: the packet lives on eigenvalues of one sign.
    assert!(m.absolute < 1.001 * m.mean.abs());
}

#[test]
fn largest_eigenvalues_converge_under_node_doubling() {
    // Eigenvalues accumulate at zero, so the smallest ones scale with the
    // node spacing; the well-separated end of the spectrum converges.
    let positive = |n: usize| {
        let s = eigensystem(&discretize(&unit(), 1.0, n, &loose()).unwrap()).unwrap();
        let mut v: Vec<f64> = s.values.into_iter().filter(|v| *v > 0.0).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    let (a, b) = (positive(256), positive(512));
    for k in 0..30 {
        assert!((a[k] - b[k]).abs() <= 1e-3 * b[k], "k={k}: {} vs {}", a[k], b[k]);
    }
    assert!((a[0] - b[0]).abs() < 1e-12 * b[0]);
    assert!((b[0] - 0.2367902098915786).abs() < 1e-12);
}

#[test]
fn skew_eigen_matches_dense_hermitian_solver() {
    let n = 40;
    let a = test_matrix(n);
    let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(0.0, a[i * n + j]));
    let mut oracle: Vec<f64> = m.clone().symmetric_eigenvalues().iter().cloned().collect();
    oracle.sort_by(f64::total_cmp);
    let e = skew_eigen(a.clone(), n).unwrap();
    let scale = oracle.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for (x, y) in e.values.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-12 * scale, "{x} vs {y}");
    }
    for c in 0..n {
        let (re, im) = e.vector(c);
        let v: Vec<Complex64> = re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect();
        for i in 0..n {
            let mv: Complex64 = (0..n).map(|j| m[(i, j)] * v[j]).sum();
            assert!((mv - v[i] * e.values[c]).norm() < 1e-11 * scale);
        }
    }
    // The extended-precision path reproduces the same decomposition.
    let dd: Vec<DoubleDouble> = a.iter().map(|&x| DoubleDouble::from_f64(x)).collect();
    let e2 = skew_eigen(dd, n).unwrap();
    for (x, y) in e.values.iter().zip(&e2.values) {
        assert!((x - y).abs() < 1e-12 * scale);
    }
}

#[test]
fn precision_follows_the_rounding_bound() {
    let heavy = KernelSpec::from_params(&PhysicalParams::with_mass(1.0, 1.0, 3.0).unwrap());
    let l = suggested_box(&sec4());
    let d = discretize(&heavy, l, 128, &loose()).unwrap();
    assert_eq!(d.precision, Precision::DoubleDouble);
    assert!(d.rounding_bound <= 1e-4);
    let forced = DiscretizeOptions {
        precision: Precision::Double,
        ..loose()
    };
    assert!(matches!(
        discretize(&heavy, l, 128, &forced),
        Err(QtoaError::PrecisionExhausted { .. })
    ));
    let huge = KernelSpec::from_params(&PhysicalParams::with_mass(1.0, 1.0, 20.0).unwrap());
    assert!(matches!(
        discretize(&huge, l, 128, &loose()),
        Err(QtoaError::PrecisionExhausted { .. })
    ));
    assert!(discretize(&unit(), 1.0, MIN_NODES - 1, &loose()).is_err());
    assert!(discretize(&unit(), -1.0, 128, &loose()).is_err());
}

#[test]
fn synthetic_profiles_are_classified() {
    let xs: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.01).collect();
    let single: Vec<f64> = xs.iter().map(|x| (-x * x / 0.1).exp()).collect();
    let f = classify_profile(&xs, &single, 1.5);
    assert_eq!(f.tag, EigenTag::NonNodal);
    assert!(f.centre_ratio > 0.99);
    assert!((f.width - (0.1 * std::f64::consts::PI).sqrt()).abs() < 0.02);
    let pair: Vec<f64> = xs.iter().map(|x| x * x * (-x * x / 0.1).exp()).collect();
    let f = classify_profile(&xs, &pair, 1.5);
    assert_eq!(f.tag, EigenTag::Nodal);
    assert!(f.centre_ratio < 0.01);
    let ramp: Vec<f64> = xs.iter().map(|x| 1.0 + x).collect();
    assert_eq!(classify_profile(&xs, &ramp, 0.9).tag, EigenTag::Indeterminate);
    assert_eq!(classify_profile(&xs, &single, 0.015).tag, EigenTag::Indeterminate);
}

#[test]
fn near_degenerate_pair_arrives_at_its_eigenvalue() {
    let mut s = eigensystem(&discretize(&unit(), 1.0, 256, &DiscretizeOptions::default()).unwrap()).unwrap();
    let opts = ArrivalOptions::default();
    let (a, b) = find_nodal_pair(&mut s, 0.005, 40, 0.02, &opts).expect("no nodal/non-nodal pair");
    assert!((s.values[a] - -0.0050924).abs() < 1e-6, "{}", s.values[a]);
    assert!((s.values[b] - -0.0051764).abs() < 1e-6, "{}", s.values[b]);
    for k in [a, b] {
        let tau = s.values[k].abs();
        let times: Vec<f64> = (0..41).map(|j| tau * (0.8 + 0.01 * j as f64)).collect();
        let m = unitary_arrival_metrics(&s, k, &times, &opts).unwrap();
        assert!((m.argmin_time - tau).abs() <= m.step, "{:?}: argmin {} vs {tau}", m.tag, m.argmin_time);
    }
    assert!(unitary_arrival_metrics(&s, a, &[0.1, 0.05, 0.2], &opts).is_err());
}
