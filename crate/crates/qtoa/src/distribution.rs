//! Arrival-time distributions from the confined spectrum.
//!
//! A state's discrete weights `|⟨ψ_n|φ⟩|²` at the eigenvalues `τ_n` are the
//! coarse-grained version of `|⟨t|φ⟩|²`; turning them into a density needs a
//! reconstruction rule ([`Broadening`]). Everything downstream (covariance,
//! mass sweeps) goes through [`ArrivalWeights`], which keeps the weights and
//! can evaluate the density at any `τ`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QtoaError, Result};
use crate::params::{with_mass_split, PhysicalParams};
use crate::semiclassical::{alpha_r_gaussian, leading_expansion, LeadingExpansion};
use crate::spectral::{
    arrival_dynamics, discretize, eigensystem, overlaps, suggested_box, DiscretizeOptions, Spectrum,
};
use crate::numerics::CutSide;
use crate::states::{evolved_gaussian, gaussian, propagate_linear, ComplexAmplitude, WavepacketSpec};
use crate::toa_kernel::KernelSpec;
use crate::warning::Warning;

/// Rule turning discrete weights into a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Broadening {
    /// `w_n / Δτ_n` at each eigenvalue with `Δτ_n = (τ_{n+1} − τ_{n−1})/2`,
    /// linearly interpolated in between.
    Gap,
    /// Each weight spread by a normalised Gaussian of fixed width `h`.
    Gaussian { h: f64 },
    /// Gaussian of width `factor × Δτ_n`, adapted to the local spacing.
    Adaptive { factor: f64 },
    /// Fixed Gaussian whose width is `spacings` times the median eigenvalue
    /// spacing where the state carries its weight; resolved per state by
    /// [`ArrivalWeights::resolve`].
    Smoothed { spacings: f64 },
}

impl Default for Broadening {
    /// Four typical spacings: wide enough to wash out the alternation of
    /// nodal and non-nodal weights, narrow next to the packet's spread.
    fn default() -> Self {
        Broadening::Smoothed { spacings: 4.0 }
    }
}

impl Broadening {
    fn validate(&self) -> Result<()> {
        match *self {
            Broadening::Gaussian { h } if !(h > 0.0 && h.is_finite()) => {
                Err(QtoaError::invalid(format!("broadening width must be positive, got {h}")))
            }
            Broadening::Adaptive { factor } | Broadening::Smoothed { spacings: factor }
                if !(factor > 0.0 && factor.is_finite()) =>
            {
                Err(QtoaError::invalid(format!("broadening factor must be positive, got {factor}")))
            }
            _ => Ok(()),
        }
    }
}

/// Uniform grid of arrival times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl TauGrid {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 || !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(QtoaError::invalid("τ-grid needs min < max and at least two points"));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.min + self.step() * k as f64).collect()
    }
}

/// Eigenvalues (ascending) with the weights of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalWeights {
    pub taus: Vec<f64>,
    pub weights: Vec<f64>,
    /// Index of each entry in the spectrum's `|τ|` ordering.
    pub indices: Vec<usize>,
    /// `(τ_{n+1} − τ_{n−1}) / 2` (one-sided at the ends).
    pub gaps: Vec<f64>,
}

impl ArrivalWeights {
    pub fn new(spectrum: &Spectrum, phi: &ComplexAmplitude) -> Self {
        Self::from_overlaps(spectrum, &overlaps(spectrum, phi))
    }

    pub fn from_overlaps(spectrum: &Spectrum, c: &[Complex64]) -> Self {
        let mut idx: Vec<usize> = (0..spectrum.len()).collect();
        idx.sort_by(|&a, &b| spectrum.values[a].total_cmp(&spectrum.values[b]));
        let taus: Vec<f64> = idx.iter().map(|&k| spectrum.values[k]).collect();
        let weights = idx.iter().map(|&k| c[k].norm_sqr()).collect();
        let n = taus.len();
        let gaps = (0..n)
            .map(|i| {
                let lo = taus[i.saturating_sub(1)];
                let hi = taus[(i + 1).min(n - 1)];
                let span = (i + 1).min(n - 1) - i.saturating_sub(1);
                (hi - lo) / span.max(1) as f64
            })
            .collect();
        ArrivalWeights {
            taus,
            weights,
            indices: idx,
            gaps,
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ_{τ_n ≤ τ} w_n`.
    pub fn probability_before(&self, tau: f64) -> f64 {
        let end = self.taus.partition_point(|&t| t <= tau);
        self.weights[..end].iter().sum()
    }

    /// Weight-weighted mean over eigenvalues in `[lo, hi]`.
    pub fn windowed_mean(&self, lo: f64, hi: f64) -> f64 {
        let (mut m, mut w) = (0.0, 0.0);
        for (&t, &p) in self.taus.iter().zip(&self.weights) {
            if t >= lo && t <= hi {
                m += t * p;
                w += p;
            }
        }
        m / w
    }

    /// Eigenvalue carrying the largest weight.
    pub fn weight_maximum(&self) -> f64 {
        let i = (0..self.taus.len())
            .max_by(|&a, &b| self.weights[a].total_cmp(&self.weights[b]))
            .unwrap_or(0);
        self.taus[i]
    }

    /// Median spacing between consecutive eigenvalues that both carry at
    /// least `1e-3` of the largest weight.
    pub fn typical_spacing(&self) -> f64 {
        let wmax = self.weights.iter().cloned().fold(0.0, f64::max);
        let mut gaps: Vec<f64> = (1..self.taus.len())
            .filter(|&i| self.weights[i - 1].min(self.weights[i]) >= 1e-3 * wmax)
            .map(|i| self.taus[i] - self.taus[i - 1])
            .collect();
        if gaps.is_empty() {
            return f64::NAN;
        }
        gaps.sort_by(f64::total_cmp);
        gaps[gaps.len() / 2]
    }

    /// Replace a [`Broadening::Smoothed`] rule by the fixed Gaussian it
    /// stands for with this state's spectrum; other rules are returned as is.
    pub fn resolve(&self, rule: &Broadening) -> Broadening {
        match *rule {
            Broadening::Smoothed { spacings } => Broadening::Gaussian {
                h: spacings * self.typical_spacing(),
            },
            other => other,
        }
    }

    /// Density at `tau` under `rule` (a [`Broadening::Smoothed`] rule is
    /// resolved against these weights on every call; resolve once when
    /// sampling many points).
    pub fn density(&self, tau: f64, rule: &Broadening) -> f64 {
        match *rule {
            Broadening::Smoothed { .. } => self.density(tau, &self.resolve(rule)),
            Broadening::Gap => {
                let i = self.taus.partition_point(|&t| t <= tau);
                if i == 0 || i == self.taus.len() {
                    return 0.0;
                }
                let (t0, t1) = (self.taus[i - 1], self.taus[i]);
                let d0 = self.weights[i - 1] / self.gaps[i - 1];
                let d1 = self.weights[i] / self.gaps[i];
                let f = if t1 > t0 { (tau - t0) / (t1 - t0) } else { 0.0 };
                d0 + (d1 - d0) * f
            }
            Broadening::Gaussian { h } => self.gaussian_sum(tau, |_| h),
            Broadening::Adaptive { factor } => self.gaussian_sum(tau, |i| factor * self.gaps[i]),
        }
    }

    fn gaussian_sum<H: Fn(usize) -> f64>(&self, tau: f64, width: H) -> f64 {
        let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = 0.0;
        for (i, (&t, &w)) in self.taus.iter().zip(&self.weights).enumerate() {
            let h = width(i);
            let u = (tau - t) / h;
            if u.abs() < 40.0 {
                s += w * norm * (-0.5 * u * u).exp() / h;
            }
        }
        s
    }
}

/// Σ over the eigenvalues `τ_n ≤ τ` of the state's weights.
pub fn arrival_probability_before(phi: &ComplexAmplitude, spectrum: &Spectrum, tau: f64) -> f64 {
    ArrivalWeights::new(spectrum, phi).probability_before(tau)
}

/// Density samples plus the weights they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TOADistribution {
    pub taus: Vec<f64>,
    pub density: Vec<f64>,
    /// The rule actually applied (smoothed rules resolved to their width).
    pub broadening: Broadening,
    pub weights: ArrivalWeights,
    /// Box half-width, node count and discretisation of the spectrum used.
    pub l: f64,
    pub nodes: usize,
    pub warnings: Vec<Warning>,
}

impl TOADistribution {
    /// Grid point of the density maximum, refined by a parabola through its
    /// neighbours.
    pub fn peak(&self) -> f64 {
        let d = &self.density;
        let i = (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap_or(0);
        if i == 0 || i + 1 == d.len() {
            return self.taus[i];
        }
        let den = d[i - 1] - 2.0 * d[i] + d[i + 1];
        let off = if den == 0.0 { 0.0 } else { 0.5 * (d[i - 1] - d[i + 1]) / den };
        self.taus[i] + off.clamp(-0.5, 0.5) * (self.taus[1] - self.taus[0])
    }

    /// Trapezoidal `∫ Π` over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.taus, &self.density)
    }

    /// Trapezoidal `∫ τ Π / ∫ Π`.
    pub fn mean(&self) -> f64 {
        let m: Vec<f64> = self.taus.iter().zip(&self.density).map(|(t, d)| t * d).collect();
        trapezoid(&self.taus, &m) / self.integral()
    }

    /// Standard deviation of the density on the grid.
    pub fn spread(&self) -> f64 {
        let mu = self.mean();
        let m: Vec<f64> = self
            .taus
            .iter()
            .zip(&self.density)
            .map(|(t, d)| (t - mu) * (t - mu) * d)
            .collect();
        (trapezoid(&self.taus, &m) / self.integral()).sqrt()
    }

    /// `∫ |Π_a − Π_b|` on a shared grid.
    pub fn l1_distance(&self, other: &TOADistribution) -> Result<f64> {
        if self.taus != other.taus {
            return Err(QtoaError::invalid("distributions live on different τ-grids"));
        }
        let diff: Vec<f64> = self.density.iter().zip(&other.density).map(|(a, b)| (a - b).abs()).collect();
        Ok(trapezoid(&self.taus, &diff))
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Median eigenvalue spacing inside `[lo, hi]`.
fn spacing_in(weights: &ArrivalWeights, lo: f64, hi: f64) -> Option<f64> {
    let mut gaps: Vec<f64> = weights
        .taus
        .windows(2)
        .filter(|w| w[0] >= lo && w[1] <= hi)
        .map(|w| w[1] - w[0])
        .collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    Some(gaps[gaps.len() / 2])
}

/// Density of `phi`'s arrival times on `grid`.
pub fn toa_distribution(
    phi: &ComplexAmplitude,
    spectrum: &Spectrum,
    grid: &TauGrid,
    broadening: &Broadening,
) -> Result<TOADistribution> {
    distribution_from_weights(ArrivalWeights::new(spectrum, phi), spectrum, grid, broadening)
}

fn distribution_from_weights(
    weights: ArrivalWeights,
    spectrum: &Spectrum,
    grid: &TauGrid,
    broadening: &Broadening,
) -> Result<TOADistribution> {
    grid.validate()?;
    broadening.validate()?;
    let broadening = &weights.resolve(broadening);
    broadening.validate()?;
    let taus = grid.values();
    let density = taus.iter().map(|&t| weights.density(t, broadening)).collect();
    let mut warnings = Vec::new();
    if let Some(spacing) = spacing_in(&weights, grid.min, grid.max) {
        if spacing > grid.step() {
            warnings.push(Warning::CoarseSpectrum {
                spacing,
                grid_step: grid.step(),
            });
        }
    }
    Ok(TOADistribution {
        taus,
        density,
        broadening: *broadening,
        weights,
        l: spectrum.l,
        nodes: spectrum.len(),
        warnings,
    })
}

/// Outcome of a time-translation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub t: f64,
    /// `sup_τ |Π_{φ(t)}(τ + t) − Π_{φ0}(τ)|` over the grid.
    pub sup_deviation: f64,
    /// The same difference integrated over the grid.
    pub l1_deviation: f64,
    /// Peak of `Π_{φ0}` on the grid, for scale.
    pub peak_density: f64,
    /// Weight of the evolved state inside the box.
    pub weight: f64,
    pub warnings: Vec<Warning>,
}

/// Weight deficit above which the evolved packet counts as leaving the box.
pub const BOX_ESCAPE_DEFICIT: f64 = 1e-6;

/// Evolve `phi0` for `t` under the dynamics the operator is conjugate to
/// and compare the translated distribution with the initial one:
/// `Π_{φ(t)}(τ) = Π_{φ0}(τ − t)` holds exactly for the unconfined operator.
pub fn covariance_check(
    phi0: &ComplexAmplitude,
    t: f64,
    spectrum: &Spectrum,
    grid: &TauGrid,
    broadening: &Broadening,
) -> Result<CovarianceReport> {
    grid.validate()?;
    broadening.validate()?;
    let dynamics = arrival_dynamics(&spectrum.kernel);
    let evolved = match phi0 {
        ComplexAmplitude::Gaussian(g) => evolved_gaussian(&g.spec, t, &dynamics)?,
        other => propagate_linear(other, t, &dynamics)?,
    };
    let w0 = ArrivalWeights::new(spectrum, phi0);
    let wt = ArrivalWeights::new(spectrum, &evolved);
    // Both states use the width resolved from the initial one.
    let broadening = &w0.resolve(broadening);
    broadening.validate()?;
    let taus = grid.values();
    let diff: Vec<f64> = taus
        .iter()
        .map(|&tau| (wt.density(tau + t, broadening) - w0.density(tau, broadening)).abs())
        .collect();
    let peak_density = taus.iter().map(|&tau| w0.density(tau, broadening)).fold(0.0, f64::max);
    let weight = wt.total();
    let mut warnings = Vec::new();
    if 1.0 - weight > BOX_ESCAPE_DEFICIT {
        let (a, b) = evolved.window();
        warnings.push(Warning::BoxEscape {
            edge_distance: spectrum.l - a.abs().max(b.abs()),
        });
    }
    Ok(CovarianceReport {
        t,
        sup_deviation: diff.iter().cloned().fold(0.0, f64::max),
        l1_deviation: trapezoid(&taus, &diff),
        peak_density,
        weight,
        warnings,
    })
}

/// Numerical settings of spectrum-based runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSettings {
    /// Box half-width; `None` picks [`suggested_box`].
    pub l: Option<f64>,
    pub nodes: usize,
    pub discretize: DiscretizeOptions,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        SpectrumSettings {
            l: None,
            nodes: 384,
            discretize: DiscretizeOptions::default(),
        }
    }
}

/// Spectrum for a packet under `params`, with the box chosen by `settings`.
pub fn spectrum_for(spec: &WavepacketSpec, params: &PhysicalParams, settings: &SpectrumSettings) -> Result<Spectrum> {
    let l = settings.l.unwrap_or_else(|| suggested_box(spec));
    let d = discretize(&KernelSpec::from_params(params), l, settings.nodes, &settings.discretize)?;
    eigensystem(&d)
}

/// Axes of a parameter sweep. Every axis must be non-empty; points are the
/// Cartesian product in the order `mu, mass_ratio, v0, sigma2, q0` (last
/// fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    /// Inertial mass.
    pub mu: Vec<f64>,
    /// `m_i / m_g`.
    pub mass_ratio: Vec<f64>,
    pub v0: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub q0: Vec<f64>,
}

/// What each sweep point computes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SweepOutput {
    /// Closed-form leading expansion (classical term and `α₂ħ²`).
    Correction,
    /// Confined-spectrum distribution on a τ-grid.
    Distribution {
        settings: SpectrumSettings,
        grid: TauGrid,
        broadening: Broadening,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub hbar: f64,
    pub g: f64,
    pub axes: SweepAxes,
    pub output: SweepOutput,
    #[serde(default)]
    pub side: CutSide,
}

/// Coordinates of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub mu: f64,
    pub mass_ratio: f64,
    pub v0: f64,
    pub sigma2: f64,
    pub q0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub point: SweepPoint,
    /// `None` on success, the error message otherwise.
    pub error: Option<String>,
    pub expansion: Option<LeadingExpansion>,
    pub alpha2: Option<Complex64>,
    pub distribution: Option<TOADistribution>,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let a = &self.axes;
        let axes = [&a.mu, &a.mass_ratio, &a.v0, &a.sigma2, &a.q0];
        let names = ["mu", "mass_ratio", "v0", "sigma2", "q0"];
        for (axis, name) in axes.iter().zip(names) {
            if axis.is_empty() {
                return Err(QtoaError::invalid(format!("sweep axis `{name}` is empty")));
            }
        }
        let mut out = Vec::new();
        for &mu in &a.mu {
            for &mass_ratio in &a.mass_ratio {
                for &v0 in &a.v0 {
                    for &sigma2 in &a.sigma2 {
                        for &q0 in &a.q0 {
                            out.push(SweepPoint {
                                index: out.len(),
                                mu,
                                mass_ratio,
                                v0,
                                sigma2,
                                q0,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

impl SweepPoint {
    /// Physical parameters: `m_i = μ`, `m_g = μ / ratio`.
    pub fn params(&self, hbar: f64, g: f64) -> Result<PhysicalParams> {
        if !(self.mass_ratio > 0.0 && self.mass_ratio.is_finite()) {
            return Err(QtoaError::invalid(format!("mass ratio must be positive, got {}", self.mass_ratio)));
        }
        let base = PhysicalParams::with_mass(hbar, g, self.mu)?;
        with_mass_split(&base, self.mu, self.mu / self.mass_ratio)
    }

    pub fn spec(&self) -> Result<WavepacketSpec> {
        WavepacketSpec::from_variance(self.q0, self.sigma2, self.v0)
    }
}

fn run_point(sweep: &SweepSpec, p: &SweepPoint) -> Result<SweepRecord> {
    let params = p.params(sweep.hbar, sweep.g)?;
    let spec = p.spec()?;
    let mut record = SweepRecord {
        point: *p,
        error: None,
        expansion: None,
        alpha2: None,
        distribution: None,
    };
    match &sweep.output {
        SweepOutput::Correction => {
            record.expansion = Some(leading_expansion(&spec, &params, sweep.side)?);
            record.alpha2 = Some(alpha_r_gaussian(2, &spec, &params, sweep.side)?);
        }
        SweepOutput::Distribution {
            settings,
            grid,
            broadening,
        } => {
            let spectrum = spectrum_for(&spec, &params, settings)?;
            let phi = gaussian(&spec, &params);
            record.distribution = Some(toa_distribution(&phi, &spectrum, grid, broadening)?);
        }
    }
    Ok(record)
}

/// Evaluate every point of the sweep (in parallel); failures are recorded
/// per point and do not stop the sweep. Records come back in point order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    let points = spec.points()?;
    Ok(points
        .par_iter()
        .map(|p| {
            run_point(spec, p).unwrap_or_else(|e| SweepRecord {
                point: *p,
                error: Some(e.to_string()),
                expansion: None,
                alpha2: None,
                distribution: None,
            })
        })
        .collect())
}
