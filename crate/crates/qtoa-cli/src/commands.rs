//! The configurable subcommands. Each one reads its section of the run
//! configuration, calls the library and hands tables and records to [`Run`].

use qtoa::classical::{classical_toa, ArrivalBranch};
use qtoa::distribution::{
    covariance_check, sweep as run_sweep, toa_distribution, SpectrumSettings, SweepOutput, SweepSpec, TOADistribution,
    TauGrid,
};
use qtoa::expectation::{expect_toa_centered, expect_toa_exact, ExpectationRecord};
use qtoa::semiclassical::{expansion_terms, leading_expansion, LeadingExpansion};
use qtoa::spectral::{
    discretize, eigensystem, overlaps, spectral_expectation, suggested_box, ArrivalOptions, EigenTag, Spectrum,
};
use qtoa::states::{evolved_gaussian, gaussian, LinearDynamics, WavepacketSpec};
use qtoa::toa_kernel::KernelSpec;
use qtoa::PhysicalParams;
use serde_json::json;

use crate::config::{DynamicsChoice, Route, RunConfig, State, SweepKind};
use crate::output::{complex, signed, Cell, CliError, Run, SpectrumRecord};

pub fn tag_name(tag: Option<EigenTag>) -> Cell {
    match tag {
        Some(EigenTag::NonNodal) => "non-nodal".into(),
        Some(EigenTag::Nodal) => "nodal".into(),
        Some(EigenTag::Indeterminate) => "indeterminate".into(),
        None => Cell::Empty,
    }
}

/// Discretise, diagonalise and record `(l, N, rule)` in the manifest.
pub fn build_spectrum(
    run: &mut Run,
    context: &str,
    spec: &WavepacketSpec,
    params: &PhysicalParams,
    settings: &SpectrumSettings,
) -> Result<Spectrum, CliError> {
    let l = settings.l.unwrap_or_else(|| suggested_box(spec));
    let d = discretize(&KernelSpec::from_params(params), l, settings.nodes, &settings.discretize)?;
    run.warn(context, &d.warnings);
    run.spectrum(SpectrumRecord {
        context: context.into(),
        l,
        nodes: settings.nodes,
        rule: "gauss-legendre",
        scheme: d.scheme,
        precision: d.precision,
        tol: settings.discretize.tol,
        rounding_bound: d.rounding_bound,
        hermiticity_residual: Some(d.hermiticity_residual()),
    });
    Ok(eigensystem(&d)?)
}

pub fn expectation(cfg: &RunConfig, run: &mut Run) -> Result<ExpectationRecord, CliError> {
    let p = cfg.physics.params()?;
    let spec = cfg.state.spec()?;
    let phi = gaussian(&spec, &p);
    let kernel = KernelSpec::from_params(&p);
    let ctrl = cfg.expectation.control();
    let rec = match cfg.expectation.route {
        Route::Exact => expect_toa_exact(&phi, &kernel, &ctrl)?,
        Route::Centered => expect_toa_centered(&phi, &kernel, &ctrl)?,
    };
    let classical = classical_toa(&p, spec.q0, spec.v0, ArrivalBranch::First)?;
    run.tolerance("expectation.tol", ctrl.tol);
    run.warn("expectation", &rec.warnings);
    run.csv(
        "expectation.csv",
        &[
            "q0 [length]",
            "v0 [length/time]",
            "sigma2 [length^2]",
            "value [time]",
            "magnitude [time]",
            "imag_residue [time]",
            "panels [1]",
            "refinement_change [time]",
            "tol [1]",
            "classical_re [time]",
            "classical_im [time]",
        ],
        [vec![
            Cell::from(spec.q0),
            spec.v0.into(),
            spec.sigma2().into(),
            rec.value.into(),
            rec.magnitude().into(),
            rec.imag_residue.into(),
            rec.panels.into(),
            rec.refinement_change.into(),
            rec.tol.into(),
            classical.re.into(),
            classical.im.into(),
        ]],
    )?;
    run.record(
        "expectation",
        json!({
            "route": cfg.expectation.route,
            "value": signed(rec.value),
            "imag_residue": rec.imag_residue,
            "relative_residue": rec.relative_residue(),
            "panels": rec.panels,
            "refinement_change": rec.refinement_change,
            "tol": rec.tol,
            "classical": complex(classical),
        }),
    );
    run.say(format!(
        "<T> = {:.10} (magnitude {:.10}); imaginary residue {:.1e}; {} outer panels; classical {:.10}",
        rec.value,
        rec.magnitude(),
        rec.imag_residue,
        rec.panels,
        classical.re
    ));
    Ok(rec)
}

pub fn semiclassical(cfg: &RunConfig, run: &mut Run) -> Result<LeadingExpansion, CliError> {
    let p = cfg.physics.params()?;
    let spec = cfg.state.spec()?;
    let side = cfg.semiclassical.side;
    let le = leading_expansion(&spec, &p, side)?;
    let terms = expansion_terms(&spec, &p, cfg.semiclassical.r_max, side)?;
    run.warn("semiclassical", &le.warnings);
    let mut rows = vec![vec![
        Cell::from(0usize),
        le.classical.re.into(),
        le.classical.im.into(),
        le.classical.re.into(),
        le.classical.im.into(),
        le.classical.norm().into(),
    ]];
    rows.extend(terms.iter().map(|t| {
        vec![
            Cell::from(t.order),
            t.coefficient.re.into(),
            t.coefficient.im.into(),
            t.contribution.re.into(),
            t.contribution.im.into(),
            t.contribution.norm().into(),
        ]
    }));
    run.csv(
        "semiclassical.csv",
        &[
            "r [1]",
            "alpha_re [time/action^r]",
            "alpha_im [time/action^r]",
            "term_re [time]",
            "term_im [time]",
            "term_magnitude [time]",
        ],
        rows,
    )?;
    let leading = [("classical", le.classical), ("correction2", le.correction2), ("total", le.total)];
    run.csv(
        "leading.csv",
        &["term", "re [time]", "im [time]", "magnitude [time]"],
        leading
            .iter()
            .map(|(name, z)| vec![Cell::from(*name), z.re.into(), z.im.into(), z.norm().into()]),
    )?;
    run.record(
        "leading_expansion",
        json!({
            "classical": complex(le.classical),
            "correction2": complex(le.correction2),
            "total": complex(le.total),
            "r_max": cfg.semiclassical.r_max,
        }),
    );
    run.say(format!(
        "tau0 = {:.10} {:+.10}i, alpha2 hbar^2 = {:.6e} {:+.6e}i, total magnitude {:.10}",
        le.classical.re,
        le.classical.im,
        le.correction2.re,
        le.correction2.im,
        le.total.norm()
    ));
    Ok(le)
}

pub fn spectrum(cfg: &RunConfig, run: &mut Run) -> Result<(), CliError> {
    let p = cfg.physics.params()?;
    let spec = cfg.state.spec()?;
    let mut s = build_spectrum(run, "spectrum", &spec, &p, &cfg.spectrum.settings())?;
    if cfg.spectrum.classify > 0 {
        s.classify_range(0..cfg.spectrum.classify, &ArrivalOptions::default());
    }
    let phi = gaussian(&spec, &p);
    let c = overlaps(&s, &phi);
    let mean = spectral_expectation(&s, &phi);
    let ortho = s.orthonormality_residual();
    run.csv(
        "spectrum.csv",
        &["index [1]", "tau [time]", "weight [1]", "tag"],
        (0..s.len()).map(|k| vec![Cell::from(k), s.values[k].into(), c[k].norm_sqr().into(), tag_name(s.tags[k])]),
    )?;
    for k in 0..cfg.spectrum.export {
        let amp = &s.amplitudes[k];
        run.csv(
            &format!("eigenfunction_{k:04}.csv"),
            &["q [length]", "re [length^-1/2]", "im [length^-1/2]", "quadrature_weight [length]"],
            (0..amp.len()).map(|i| {
                vec![
                    Cell::from(s.rule.nodes[i]),
                    amp[i].re.into(),
                    amp[i].im.into(),
                    s.rule.weights[i].into(),
                ]
            }),
        )?;
    }
    let max = s.values.iter().cloned().fold(0.0, |a: f64, b| a.max(b.abs()));
    run.record(
        "spectrum",
        json!({
            "orthonormality_residual": ortho,
            "spectral_mean": signed(mean.mean),
            "captured_weight": mean.weight,
            "absolute_moment": mean.absolute,
            "smallest_magnitude": s.values[0].abs(),
            "largest_magnitude": max,
        }),
    );
    run.say(format!(
        "{} eigenvalues in [−{max:.6}, {max:.6}], box l = {:.6}; spectral mean {:.10} (weight {:.10}); \
         orthonormality residual {ortho:.1e}",
        s.len(),
        s.l,
        mean.mean,
        mean.weight
    ));
    Ok(())
}

/// Density table and weight table of one distribution.
pub fn write_distribution(run: &mut Run, stem: &str, d: &TOADistribution) -> Result<(), CliError> {
    run.csv(
        &format!("{stem}.csv"),
        &["tau [time]", "density [1/time]"],
        d.taus.iter().zip(&d.density).map(|(&t, &v)| vec![t, v]),
    )?;
    let w = &d.weights;
    run.csv(
        &format!("{stem}_weights.csv"),
        &["eigen_index [1]", "tau [time]", "weight [1]", "gap [time]"],
        (0..w.taus.len()).map(|i| vec![Cell::from(w.indices[i]), w.taus[i].into(), w.weights[i].into(), w.gaps[i].into()]),
    )
}

pub fn distribution_summary(d: &TOADistribution) -> serde_json::Value {
    json!({
        "peak": signed(d.peak()),
        "mean": signed(d.mean()),
        "spread": d.spread(),
        "integral": d.integral(),
        "captured_weight": d.weights.total(),
        "broadening": d.broadening,
        "l": d.l,
        "nodes": d.nodes,
    })
}

pub fn distribution(cfg: &RunConfig, run: &mut Run) -> Result<TOADistribution, CliError> {
    let p = cfg.physics.params()?;
    let spec = cfg.state.spec()?;
    let s = build_spectrum(run, "distribution", &spec, &p, &cfg.spectrum.settings())?;
    let grid = cfg.distribution.grid(&cfg.state, &p)?;
    let phi = gaussian(&spec, &p);
    let d = toa_distribution(&phi, &s, &grid, &cfg.distribution.broadening)?;
    run.warn("distribution", &d.warnings);
    write_distribution(run, "distribution", &d)?;
    run.record("distribution", distribution_summary(&d));
    run.record("tau_grid", json!(grid));
    run.say(format!(
        "distribution on [{:.6}, {:.6}] ({} points): peak {:.8}, mean {:.8}, spread {:.6}, integral {:.8}",
        grid.min,
        grid.max,
        grid.points,
        d.peak(),
        d.mean(),
        d.spread(),
        d.integral()
    ));

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &t in &cfg.distribution.covariance_times {
        let c = covariance_check(&phi, t, &s, &grid, &cfg.distribution.broadening)?;
        run.warn(&format!("covariance t={t}"), &c.warnings);
        rows.push(vec![t, c.sup_deviation, c.l1_deviation, c.peak_density, c.weight]);
        run.say(format!(
            "covariance at t = {t}: sup deviation {:.3e} (peak density {:.4}), retained weight {:.10}",
            c.sup_deviation, c.peak_density, c.weight
        ));
        reports.push(c);
    }
    if !rows.is_empty() {
        run.csv(
            "covariance.csv",
            &["t [time]", "sup_deviation [1/time]", "l1_deviation [1]", "peak_density [1/time]", "weight [1]"],
            rows,
        )?;
        run.record("covariance", json!(reports));
    }
    Ok(d)
}

pub fn dynamics(choice: DynamicsChoice, p: &PhysicalParams) -> LinearDynamics {
    match choice {
        DynamicsChoice::Field => LinearDynamics::printed(p),
        DynamicsChoice::ToaConjugate => LinearDynamics::toa_conjugate(p),
    }
}

pub fn evolve(cfg: &RunConfig, run: &mut Run) -> Result<(), CliError> {
    let p = cfg.physics.params()?;
    let spec = cfg.state.spec()?;
    let dynamics = dynamics(cfg.evolve.dynamics, &p);
    let amps = cfg
        .evolve
        .times
        .iter()
        .map(|&t| Ok((t, evolved_gaussian(&spec, t, &dynamics)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let (q_min, q_max) = match (cfg.evolve.q_min, cfg.evolve.q_max) {
        (Some(a), Some(b)) => (a, b),
        _ => amps.iter().map(|(_, a)| a.window()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
            (lo.min(a), hi.max(b))
        }),
    };
    let n = cfg.evolve.points;
    let dq = (q_max - q_min) / (n - 1) as f64;
    let mut rows = Vec::with_capacity(n * amps.len());
    let mut per_time = Vec::new();
    for (t, amp) in &amps {
        let g = amp.sample(q_min, dq, n);
        for (k, v) in g.values.iter().enumerate() {
            rows.push(vec![*t, q_min + dq * k as f64, v.re, v.im, v.norm_sqr()]);
        }
        let centre = amp.mean_position();
        let classical = dynamics.trajectory(spec.q0, spec.v0, *t);
        per_time.push(json!({ "t": t, "norm": amp.norm_sq(), "mean_position": centre, "classical_position": classical }));
        run.say(format!("t = {t}: <q> = {centre:.10}, classical path {classical:.10}"));
    }
    run.csv(
        "evolve.csv",
        &["t [time]", "q [length]", "re [length^-1/2]", "im [length^-1/2]", "density [1/length]"],
        rows,
    )?;
    run.record("dynamics", json!(dynamics));
    run.record("evolution", json!(per_time));
    Ok(())
}

pub fn sweep(cfg: &RunConfig, run: &mut Run) -> Result<(), CliError> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("the sweep command needs a [sweep] section".into()))?;
    let axes = cfg.sweep_axes(sw)?;
    let mut spec = SweepSpec {
        hbar: cfg.physics.hbar,
        g: cfg.physics.g,
        axes,
        output: SweepOutput::Correction,
        side: cfg.semiclassical.side,
    };
    let points = spec.points()?;
    if sw.output == SweepKind::Distribution {
        let grid = match (cfg.distribution.tau_min, cfg.distribution.tau_max) {
            (Some(_), Some(_)) => cfg.distribution.grid(&cfg.state, &cfg.physics.params()?)?,
            // Hull of the per-point default grids, so every point shares one grid.
            _ => {
                let mut hull = (f64::INFINITY, f64::NEG_INFINITY);
                for pt in &points {
                    let state = State {
                        q0: pt.q0,
                        v0: pt.v0,
                        sigma2: pt.sigma2,
                    };
                    let g = cfg.distribution.grid(&state, &pt.params(spec.hbar, spec.g)?)?;
                    hull = (hull.0.min(g.min), hull.1.max(g.max));
                }
                TauGrid {
                    min: hull.0,
                    max: hull.1,
                    points: cfg.distribution.points,
                }
            }
        };
        spec.output = SweepOutput::Distribution {
            settings: cfg.spectrum.settings(),
            grid,
            broadening: cfg.distribution.broadening,
        };
        run.record("tau_grid", json!(grid));
    }
    let records = run_sweep(&spec)?;
    let point_cells = |r: &qtoa::distribution::SweepRecord| -> Vec<Cell> {
        let p = &r.point;
        vec![p.index.into(), p.mu.into(), p.mass_ratio.into(), p.v0.into(), p.sigma2.into(), p.q0.into()]
    };
    let base = ["index [1]", "mu [mass]", "mass_ratio [1]", "v0 [length/time]", "sigma2 [length^2]", "q0 [length]"];
    let mut status = Vec::new();
    match sw.output {
        SweepKind::Correction => {
            let mut header = base.to_vec();
            header.extend([
                "classical_re [time]",
                "classical_im [time]",
                "correction2_re [time]",
                "correction2_im [time]",
                "total_re [time]",
                "total_im [time]",
                "total_magnitude [time]",
                "alpha2_re [time/action^2]",
                "alpha2_im [time/action^2]",
                "error",
            ]);
            let rows = records.iter().map(|r| {
                let mut row = point_cells(r);
                match (&r.expansion, r.alpha2) {
                    (Some(e), Some(a)) => row.extend([
                        e.classical.re,
                        e.classical.im,
                        e.correction2.re,
                        e.correction2.im,
                        e.total.re,
                        e.total.im,
                        e.total.norm(),
                        a.re,
                        a.im,
                    ]
                    .map(Cell::from)),
                    _ => row.extend(std::iter::repeat(Cell::Empty).take(9)),
                }
                row.push(r.error.as_deref().into());
                row
            });
            run.csv("sweep.csv", &header, rows.collect::<Vec<_>>())?;
        }
        SweepKind::Distribution => {
            let mut header = base.to_vec();
            header.extend(["peak [time]", "mean [time]", "spread [time]", "integral [1]", "l [length]", "error"]);
            let mut rows = Vec::new();
            for r in &records {
                let mut row = point_cells(r);
                match &r.distribution {
                    Some(d) => {
                        row.extend([d.peak(), d.mean(), d.spread(), d.integral(), d.l].map(Cell::from));
                        run.csv(
                            &format!("point_{:04}.csv", r.point.index),
                            &["tau [time]", "density [1/time]"],
                            d.taus.iter().zip(&d.density).map(|(&t, &v)| vec![t, v]),
                        )?;
                        run.warn(&format!("sweep point {}", r.point.index), &d.warnings);
                    }
                    None => row.extend(std::iter::repeat(Cell::Empty).take(5)),
                }
                row.push(r.error.as_deref().into());
                rows.push(row);
            }
            run.csv("sweep.csv", &header, rows)?;
        }
    }
    for r in &records {
        if let Some(e) = &r.expansion {
            run.warn(&format!("sweep point {}", r.point.index), &e.warnings);
        }
        status.push(json!({
            "index": r.point.index,
            "status": if r.error.is_some() { "error" } else { "ok" },
            "error": r.error,
        }));
    }
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    run.record("axes", json!(spec.axes));
    run.record("points", json!(status));
    run.say(format!("sweep: {} points, {failed} failed", records.len()));
    if failed > 0 {
        run.fail(format!("{failed} of {} sweep points failed", records.len()));
    }
    Ok(())
}
