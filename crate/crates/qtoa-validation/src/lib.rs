//! End-to-end acceptance checks.
//!
//! Each criterion runs the public `qtoa` API on fixed inputs and returns a
//! [`Report`] with a verdict and the numbers behind it. The checks are plain
//! functions so that the acceptance runner can print one line per criterion
//! and keep going after a failure.

use std::time::Instant;

use num_complex::Complex64;
use qtoa::classical::{classical_toa, spread_ok, ArrivalBranch};
use qtoa::distribution::{
    covariance_check, spectrum_for, toa_distribution, Broadening, SpectrumSettings, TOADistribution, TauGrid,
};
use qtoa::expectation::{expect_toa_exact, ExpectationRecord, QuadControl};
use qtoa::numerics::{bessel_j1, hyp0f1, hyp2f1_row, CutSide};
use qtoa::semiclassical::{alpha_r_gaussian, leading_expansion, with_mass_split};
use qtoa::spectral::{
    discretize, eigensystem, find_nodal_pair, spectral_expectation, suggested_box, unitary_arrival_metrics,
    ArrivalOptions, DiscretizeOptions,
};
use qtoa::states::{gaussian, WavepacketSpec};
use qtoa::toa_kernel::KernelSpec;
use qtoa::{PhysicalParams, Result, Warning};

const SIDE: CutSide = CutSide::Below;

/// Outcome of one criterion.
#[derive(Debug, Clone)]
pub struct Report {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
}

impl Report {
    fn new(id: u32, title: &'static str) -> Self {
        Report {
            id,
            title,
            pass: true,
            details: Vec::new(),
        }
    }

    /// Record a sub-check; the criterion passes only if all of them do.
    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.details.push(format!("[{}] {what}", if ok { "ok" } else { "FAIL" }));
    }

    fn note(&mut self, what: String) {
        self.details.push(format!("      {what}"));
    }

    fn error(id: u32, title: &'static str, e: impl std::fmt::Display) -> Self {
        Report {
            id,
            title,
            pass: false,
            details: vec![format!("[FAIL] error: {e}")],
        }
    }
}

/// Reference packet: q0 = −5, σ² = 0.1, μ = g = ħ = 1.
fn reference_spec(v0: f64) -> WavepacketSpec {
    WavepacketSpec::from_variance(-5.0, 0.1, v0).expect("valid packet")
}

fn exact(spec: &WavepacketSpec, p: &PhysicalParams) -> Result<ExpectationRecord> {
    expect_toa_exact(&gaussian(spec, p), &KernelSpec::from_params(p), &QuadControl::default())
}

/// Shared by criteria 1, 2, 5 and 8.
pub struct Context {
    pub reference: ExpectationRecord,
    pub reference_seconds: f64,
}

pub fn context() -> Result<Context> {
    let start = Instant::now();
    let reference = exact(&reference_spec(30.0), &PhysicalParams::natural())?;
    Ok(Context {
        reference,
        reference_seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn criterion1(ctx: &Context) -> Report {
    let mut r = Report::new(1, "exact expectation at v0 = 30");
    let m = ctx.reference.magnitude();
    r.check(
        (m - 0.166663).abs() <= 1e-4,
        format!("|<T>| = {m:.10} (target 0.166663 ± 1e-4), signed {:.10}", ctx.reference.value),
    );
    r.check(
        ctx.reference_seconds < 30.0,
        format!("runtime {:.2} s (< 30 s) at tol {:e}", ctx.reference_seconds, ctx.reference.tol),
    );
    r
}

pub fn criterion2(ctx: &Context) -> Report {
    let mut r = Report::new(2, "semiclassical pair at v0 = 30");
    let le = match leading_expansion(&reference_spec(30.0), &PhysicalParams::natural(), SIDE) {
        Ok(le) => le,
        Err(e) => return Report::error(2, r.title, e),
    };
    let t0 = le.classical.norm();
    let a2 = le.correction2.norm();
    r.check((t0 - 0.166206).abs() <= 1e-6, format!("|tau0| = {t0:.9} (target 0.166206 ± 1e-6)"));
    r.check((a2 - 0.000455).abs() <= 1e-6, format!("|alpha2 hbar^2| = {a2:.9e} (target 4.55e-4 ± 1e-6)"));
    let gap = (le.total.norm() - ctx.reference.magnitude()).abs();
    r.check(
        gap <= 5e-6,
        format!("|total| = {:.9}, {gap:.2e} from the exact value (≤ 5e-6)", le.total.norm()),
    );
    r
}

pub fn criterion3() -> Report {
    let mut r = Report::new(3, "tunneling regime at v0 = 2");
    let p = PhysicalParams::natural();
    // The slow launch from below reaches the origin; its magnitude is the
    // reference value. Launched from above the origin at the same speed the
    // particle turns back at q = 2 before arriving, and the classical term
    // is evaluated on its branch cut.
    let below = reference_spec(2.0);
    let above = match WavepacketSpec::from_variance(5.0, 0.1, 2.0) {
        Ok(s) => s,
        Err(e) => return Report::error(3, r.title, e),
    };
    let run = |r: &mut Report| -> Result<()> {
        let ex = exact(&below, &p)?;
        r.check(
            (ex.magnitude() - 3.918569).abs() <= 1e-2,
            format!("q0 = −5: |<T>| = {:.8} (target 3.918569 ± 1e-2)", ex.magnitude()),
        );
        let le_below = leading_expansion(&below, &p, SIDE)?;
        r.note(format!(
            "q0 = −5: expansion {:.7} is real, {:.4} away from the exact value",
            le_below.total.re,
            (ex.value - le_below.total.re).abs()
        ));
        let le = leading_expansion(&above, &p, SIDE)?;
        r.check(
            (le.total.re - 2.0).abs() <= 1e-6 && (le.total.im - -1.598972).abs() <= 1e-3,
            format!(
                "q0 = +5: expansion = {:.7} {:+.7}i (target 2.0 − 1.598972i, cut approached from below)",
                le.total.re, le.total.im
            ),
        );
        let branch = le.warnings.iter().any(|w| matches!(w, Warning::BranchCut { .. }));
        r.check(branch, "q0 = +5: branch-cut warning raised".into());
        let ex_above = exact(&above, &p)?;
        let disagreement = (Complex64::new(ex_above.value, 0.0) - le.total).norm();
        r.check(
            disagreement > 0.1,
            format!(
                "q0 = +5: exact {:.8} vs expansion, |difference| = {disagreement:.4} (> 0.1)",
                ex_above.value
            ),
        );
        Ok(())
    };
    if let Err(e) = run(&mut r) {
        r.check(false, format!("error: {e}"));
    }
    r
}

/// ¹³³Cs mass in kg.
pub const CS133_MASS: f64 = 2.207e-25;

pub fn criterion4() -> Report {
    let mut r = Report::new(4, "caesium benchmark");
    let p = match PhysicalParams::with_mass(1.05e-34, 9.8, CS133_MASS) {
        Ok(p) => p,
        Err(e) => return Report::error(4, r.title, e),
    };
    let spec = match WavepacketSpec::new(-1.0, 1e-3, 10.0) {
        Ok(s) => s,
        Err(e) => return Report::error(4, r.title, e),
    };
    match leading_expansion(&spec, &p, SIDE) {
        Ok(le) => {
            let c = le.correction2.norm();
            r.check(
                (c - 7.46e-17).abs() <= 0.01 * 7.46e-17,
                format!("|alpha2 hbar^2| = {c:.4e} s (target 7.46e-17 s ± 1%)"),
            );
            r.note(format!("classical term {:.10} s", le.classical.re));
        }
        Err(e) => return Report::error(4, r.title, e),
    }
    r
}

pub fn criterion5(ctx: &Context) -> Report {
    let title = "spectral properties";
    let mut r = Report::new(5, title);
    let run = |r: &mut Report| -> Result<()> {
        let unit = KernelSpec::from_params(&PhysicalParams::natural());
        let opts = DiscretizeOptions {
            tol: 1e-4,
            ..Default::default()
        };
        let spec = reference_spec(30.0);
        let l = suggested_box(&spec);
        let d = discretize(&unit, l, 512, &opts)?;
        let h = d.hermiticity_residual();
        r.check(h <= 1e-13, format!("hermiticity residual {h:.1e} (l = {l:.4}, N = 512)"));
        let s = eigensystem(&d)?;
        let o = s.orthonormality_residual();
        r.check(o <= 1e-10, format!("orthonormality residual {o:.1e}"));
        let m = spectral_expectation(&s, &gaussian(&spec, &PhysicalParams::natural()));
        let reference = ctx.reference.value;
        let rel = (m.mean - reference).abs() / reference.abs();
        r.check(rel <= 1e-3, format!("spectral mean {:.10} vs quadrature, relative {rel:.1e}", m.mean));

        // Self-convergence of the well-separated (largest-|τ|) eigenvalues.
        let positive = |n: usize| -> Result<Vec<f64>> {
            let s = eigensystem(&discretize(&unit, 1.0, n, &opts)?)?;
            let mut v: Vec<f64> = s.values.into_iter().filter(|v| *v > 0.0).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            Ok(v)
        };
        let (a, b) = (positive(256)?, positive(512)?);
        let worst = (0..30).map(|k| (a[k] - b[k]).abs() / b[k]).fold(0.0, f64::max);
        r.check(worst <= 1e-3, format!("30 largest eigenvalues, N 256→512: worst change {worst:.1e}"));

        let mut s = eigensystem(&discretize(&unit, 1.0, 256, &DiscretizeOptions::default())?)?;
        let ao = ArrivalOptions::default();
        match find_nodal_pair(&mut s, 0.005, 40, 0.02, &ao) {
            Some((i, j)) => {
                r.note(format!(
                    "pair at l = 1, N = 256: {:.7} ({:?}), {:.7} ({:?})",
                    s.values[i], s.tags[i], s.values[j], s.tags[j]
                ));
                for k in [i, j] {
                    let tau = s.values[k].abs();
                    let times: Vec<f64> = (0..41).map(|q| tau * (0.8 + 0.01 * q as f64)).collect();
                    let am = unitary_arrival_metrics(&s, k, &times, &ao)?;
                    r.check(
                        (am.argmin_time - tau).abs() <= am.step,
                        format!("{:?} argmin at {:.7} vs |tau| {tau:.7} (step {:.1e})", am.tag, am.argmin_time, am.step),
                    );
                }
            }
            None => r.check(false, "no near-degenerate nodal/non-nodal pair found".into()),
        }
        Ok(())
    };
    if let Err(e) = run(&mut r) {
        r.check(false, format!("error: {e}"));
    }
    r
}

pub fn criterion6() -> Report {
    let mut r = Report::new(6, "time-translation covariance");
    let run = |r: &mut Report| -> Result<()> {
        let p = PhysicalParams::natural();
        let spec = reference_spec(30.0);
        let s = spectrum_for(&spec, &p, &SpectrumSettings::default())?;
        let phi = gaussian(&spec, &p);
        let grid = TauGrid {
            min: -0.24,
            max: -0.09,
            points: 1501,
        };
        for t in [0.05, 0.1] {
            let c = covariance_check(&phi, t, &s, &grid, &Broadening::default())?;
            r.check(
                c.sup_deviation <= 1e-3 && c.warnings.is_empty(),
                format!("t = {t}: sup deviation {:.2e} (peak density {:.2})", c.sup_deviation, c.peak_density),
            );
        }
        Ok(())
    };
    if let Err(e) = run(&mut r) {
        r.check(false, format!("error: {e}"));
    }
    r
}

/// Distribution and covariance floor for one mass at the WEP parameters.
fn wep_point(mu: f64, grid: &TauGrid) -> Result<(TOADistribution, f64)> {
    let p = PhysicalParams::with_mass(1.0, 1.0, mu)?;
    let spec = reference_spec(20.0);
    let settings = SpectrumSettings {
        nodes: 512,
        ..Default::default()
    };
    let s = spectrum_for(&spec, &p, &settings)?;
    let phi = gaussian(&spec, &p);
    let d = toa_distribution(&phi, &s, grid, &Broadening::default())?;
    let c = covariance_check(&phi, 0.05, &s, grid, &Broadening::default())?;
    Ok((d, c.l1_deviation))
}

pub fn criterion7() -> Report {
    let mut r = Report::new(7, "mass dependence of arrival distributions");
    let run = |r: &mut Report| -> Result<()> {
        let grid = TauGrid {
            min: -0.45,
            max: -0.05,
            points: 8001,
        };
        let mut ds = Vec::new();
        let mut floor: f64 = 0.0;
        for mu in [1.0, 2.0, 3.0] {
            let (d, f) = wep_point(mu, &grid)?;
            r.note(format!(
                "mu = {mu}: peak {:.6}, mean {:.6}, spread {:.5}, integral {:.5}",
                d.peak(),
                d.mean(),
                d.spread(),
                d.integral()
            ));
            floor = floor.max(f);
            ds.push(d);
        }
        r.note(format!("covariance L1 noise floor (t = 0.05): {floor:.2e}"));
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let l1 = ds[i].l1_distance(&ds[j])?;
            r.check(l1 > 10.0 * floor, format!("L1(mu={}, mu={}) = {l1:.4} (> 10 × floor)", i + 1, j + 1));
        }
        let classical = classical_toa(&PhysicalParams::natural(), -5.0, 20.0, ArrivalBranch::First)?.re;
        let offsets: Vec<f64> = ds.iter().map(|d| (d.peak() - classical).abs()).collect();
        r.check(
            offsets[0] > offsets[1] && offsets[1] > offsets[2],
            format!("peak offsets from classical {classical:.6}: {} shrink with mass", sci(&offsets, 2)),
        );
        let mean_offsets: Vec<f64> = ds.iter().map(|d| (d.mean() - classical).abs()).collect();
        r.note(format!(
            "mean offsets {}, ratios to mu = 3: {:.2} : {:.2} : 1 (1/mu^2 gives 9 : 2.25 : 1)", sci(&mean_offsets, 2),
            mean_offsets[0] / mean_offsets[2],
            mean_offsets[1] / mean_offsets[2]
        ));
        Ok(())
    };
    if let Err(e) = run(&mut r) {
        r.check(false, format!("error: {e}"));
    }
    r
}

pub fn criterion8(ctx: &Context) -> Report {
    let mut r = Report::new(8, "property suites");
    let run = |r: &mut Report| -> Result<()> {
        let worst_j1 = (1..=10_000)
            .map(|k| {
                let x = 0.01 * k as f64;
                (hyp0f1(2.0, -x * x / 4.0) - 2.0 * bessel_j1(x) / x).abs()
            })
            .fold(0.0, f64::max);
        r.check(worst_j1 < 1e-12, format!("0F1(;2;−x²/4) − 2J1(x)/x on (0, 100]: {worst_j1:.1e}"));

        let worst_2f1 = (0..=5990)
            .map(|k| {
                let z = -5.0 + 0.001 * k as f64;
                let v = hyp2f1_row(0, z, SIDE);
                (v - Complex64::new(2.0 / (1.0 + (1.0 - z).sqrt()), 0.0)).norm()
            })
            .fold(0.0, f64::max);
        r.check(worst_2f1 < 1e-10, format!("2F1(1/2,1;2;z) − 2/(1+√(1−z)) on [−5, 0.99]: {worst_2f1:.1e}"));

        let mut odd_zero = true;
        for v0 in [2.0, 30.0] {
            for order in [1, 3, 5, 7] {
                odd_zero &= alpha_r_gaussian(order, &reference_spec(v0), &PhysicalParams::natural(), SIDE)?
                    == Complex64::new(0.0, 0.0);
            }
        }
        r.check(odd_zero, "odd-order Gaussian corrections r = 1, 3, 5, 7 are exactly zero".into());

        let res = ctx.reference.relative_residue();
        r.check(res < 1e-6, format!("imaginary residue of the exact integral: {res:.1e} relative"));

        let free = exact(&reference_spec(30.0), &PhysicalParams::natural().with_g(1e-3))?;
        let dev = (free.magnitude() - 5.0 / 30.0).abs() / (5.0 / 30.0);
        r.check(dev < 0.01, format!("g = 1e-3: |<T>| = {:.8} vs |q0|/v0, relative {dev:.1e}", free.magnitude()));

        let p = PhysicalParams::natural();
        let mut mismatches = 0;
        let mut warned = 0;
        let mut cases = 0;
        for q0 in [-8.0, -2.0, 0.5, 3.0, 5.0, 7.0, 7.9] {
            for v0 in [1.0, 2.0, 4.0, 10.0] {
                for sigma in [0.05, 0.5, 1.0, 3.0] {
                    let spec = WavepacketSpec::new(q0, sigma, v0)?;
                    let violated = sigma >= v0 * v0 / p.g - 2.0 * q0;
                    let le = leading_expansion(&spec, &p, SIDE)?;
                    let has = le.warnings.iter().any(|w| matches!(w, Warning::SpreadBound { .. }));
                    mismatches += usize::from(has != violated || spread_ok(&spec, &p).ok == violated);
                    warned += usize::from(has);
                    cases += 1;
                }
            }
        }
        r.check(
            mismatches == 0,
            format!("spread-bound warning matches σ ≥ v0²/g − 2q0 on {cases} cases ({warned} warned)"),
        );
        Ok(())
    };
    if let Err(e) = run(&mut r) {
        r.check(false, format!("error: {e}"));
    }
    r
}

/// `[a, b, c]` in scientific notation.
fn sci(v: &[f64], digits: usize) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.digits$e}")).collect();
    format!("[{}]", items.join(", "))
}

fn strictly(v: &[f64], increasing: bool) -> bool {
    v.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

/// Distributions along one trend axis, all on the same box, node count,
/// τ-grid and Gaussian width so that their spreads are comparable.
fn trend_distributions(points: &[(f64, f64, f64, PhysicalParams)]) -> Result<Vec<TOADistribution>> {
    let specs = points
        .iter()
        .map(|&(q0, s2, v0, _)| WavepacketSpec::from_variance(q0, s2, v0))
        .collect::<Result<Vec<_>>>()?;
    let l = specs.iter().map(suggested_box).fold(0.0, f64::max);
    let settings = SpectrumSettings {
        l: Some(l),
        ..Default::default()
    };
    let grid = TauGrid {
        min: -0.5,
        max: 0.1,
        points: 6001,
    };
    let broadening = Broadening::Gaussian { h: 0.008 };
    specs
        .iter()
        .zip(points)
        .map(|(spec, (.., p))| {
            let s = spectrum_for(spec, p, &settings)?;
            toa_distribution(&gaussian(spec, p), &s, &grid, &broadening)
        })
        .collect()
}

pub fn criterion9() -> Report {
    let mut r = Report::new(9, "trends");
    let run = |r: &mut Report| -> Result<()> {
        let a2 = |q0: f64, s2: f64, v0: f64, p: &PhysicalParams| -> Result<f64> {
            let spec = WavepacketSpec::from_variance(q0, s2, v0)?;
            Ok(leading_expansion(&spec, p, SIDE)?.correction2.norm())
        };
        for mu in [1.0, 2.0, 3.0] {
            let p = PhysicalParams::with_mass(1.0, 1.0, mu)?;
            let by_v0 = [20.0, 30.0, 40.0].map(|v0| a2(-5.0, 0.1, v0, &p)).into_iter().collect::<Result<Vec<_>>>()?;
            let by_s2 = [0.05, 0.1, 0.2].map(|s2| a2(-5.0, s2, 30.0, &p)).into_iter().collect::<Result<Vec<_>>>()?;
            let by_q0 = [100.0, 300.0, 440.0].map(|q0| a2(q0, 0.1, 30.0, &p)).into_iter().collect::<Result<Vec<_>>>()?;
            r.check(strictly(&by_v0, false), format!("mu = {mu}: |alpha2| over v0 = 20, 30, 40: {}", sci(&by_v0, 3)));
            r.check(strictly(&by_s2, false), format!("mu = {mu}: |alpha2| over σ² = 0.05, 0.1, 0.2: {}", sci(&by_s2, 3)));
            r.check(
                strictly(&by_q0, true),
                format!("mu = {mu}: |alpha2| over q0 = 100, 300, 440 (turning point 450): {}", sci(&by_q0, 3)),
            );
        }

        let base = PhysicalParams::natural();
        let split = |ratio: f64| with_mass_split(&base, 1.0, 1.0 / ratio);
        let corr = [0.5, 1.0, 2.0]
            .map(|k| split(k).and_then(|p| a2(-5.0, 0.1, 30.0, &p)))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        r.check(
            (corr[0] - corr[1]).abs() > (corr[2] - corr[1]).abs(),
            format!("|alpha2| at m_i/m_g = 0.5, 1, 2: {}", sci(&corr, 5)),
        );

        let p = PhysicalParams::natural();
        let spreads = |ds: Vec<TOADistribution>| ds.iter().map(|d| d.spread()).collect::<Vec<_>>();
        let sharp = spreads(trend_distributions(&[20.0, 30.0, 40.0].map(|v0| (-5.0, 0.1, v0, p)))?);
        r.check(strictly(&sharp, false), format!("distribution spread over v0 = 20, 30, 40: {sharp:.5?}"));
        let wide = spreads(trend_distributions(&[0.1, 0.2, 0.4].map(|s2| (-5.0, s2, 30.0, p)))?);
        r.check(strictly(&wide, true), format!("distribution spread over σ² = 0.1, 0.2, 0.4: {wide:.5?}"));
        let shift: Vec<f64> = trend_distributions(&[-5.0, -3.0, -1.0].map(|q0| (q0, 0.1, 30.0, p)))?
            .iter()
            .map(|d| d.mean())
            .collect();
        r.check(strictly(&shift, true), format!("distribution mean over q0 = −5, −3, −1: {shift:.5?}"));

        let ratios = [0.5, 1.0, 2.0].map(split).into_iter().collect::<Result<Vec<_>>>()?;
        let ds = trend_distributions(&ratios.iter().map(|&p| (-5.0, 0.1, 30.0, p)).collect::<Vec<_>>())?;
        let (low, high) = (ds[0].l1_distance(&ds[1])?, ds[2].l1_distance(&ds[1])?);
        r.check(
            low > high,
            format!("distribution L1 from m_i = m_g: ratio 0.5 → {low:.4e}, ratio 2 → {high:.4e}"),
        );
        Ok(())
    };
    if let Err(e) = run(&mut r) {
        r.check(false, format!("error: {e}"));
    }
    r
}

/// All criteria in order.
pub fn run_all() -> Vec<Report> {
    let ctx = context();
    let with_ctx = |id: u32, title: &'static str, f: fn(&Context) -> Report| match &ctx {
        Ok(c) => f(c),
        Err(e) => Report::error(id, title, e),
    };
    vec![
        with_ctx(1, "exact expectation at v0 = 30", criterion1),
        with_ctx(2, "semiclassical pair at v0 = 30", criterion2),
        criterion3(),
        criterion4(),
        with_ctx(5, "spectral properties", criterion5),
        criterion6(),
        criterion7(),
        with_ctx(8, "property suites", criterion8),
        criterion9(),
    ]
}
