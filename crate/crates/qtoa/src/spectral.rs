//! Coarse-grained spectrum of the arrival-time operator confined to `[−l, l]`.
//!
//! The kernel jumps across the diagonal, which spoils plain Nyström
//! quadrature (first-order convergence). The default discretisation is
//! therefore a product-integration Galerkin scheme on Gauss–Legendre nodes:
//! the smooth factor `S(q,q')ψ(q')` is interpolated by Lagrange polynomials
//! and the `sgn(q−q')` factor is integrated exactly against them,
//!
//! ```text
//! C_ij = ∫_{−1}^{x_i} ℓ_j = w_j Σ_k (2k+1)/2 P_k(x_j) ∫_{−1}^{x_i} P_k
//! G_ij = antisym( w_i (2 C_ij − w_j) )
//! M_ij = i S(q_i,q_j) G_ij / √(w_i w_j)
//! ```
//!
//! `M = iA` with `A` real antisymmetric, so the matrix is Hermitian by
//! construction and its spectrum comes in `±τ` pairs. Eigenvectors map back
//! to amplitudes through `ψ(q_i) = v_i / √w_i` and are orthonormal under the
//! quadrature inner product.
//!
//! The matrix norm grows like `exp(1.09 μ √g l^{3/2} / ħ)` (the kernel is a
//! modified Bessel function where `q + q' < 0`), so small eigenvalues are
//! lost in `f64` rounding for heavy particles or large boxes.
//! [`Precision::Auto`] switches the whole construction and reduction to
//! double-double arithmetic when needed, and refuses runs that even that
//! cannot resolve.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QtoaError, Result};
use crate::numerics::eigen::skew_eigen;
use crate::numerics::special::hyp0f1_2_nonneg;
use crate::numerics::{gauss_legendre_unit, hyp0f1, DoubleDouble, Precision, QuadratureRule, Real};
use crate::states::{
    propagate_grid, ComplexAmplitude, GridAmplitude, LegendreAmplitude, LinearDynamics, WavepacketSpec,
};
use crate::toa_kernel::KernelSpec;
use crate::warning::Warning;

/// Smallest accepted node count.
pub const MIN_NODES: usize = 64;

/// Half-width of the packet that a suggested box must contain, in spreads.
pub const BOX_PACKET_SIGMAS: f64 = 6.5;

/// How the jump of the kernel across the diagonal is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact integration of `sgn` against the interpolating polynomials.
    #[default]
    ProductIntegration,
    /// Symmetrised Nyström, `√w_i K(q_i,q_j) √w_j`.
    Nystrom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeOptions {
    pub scheme: Scheme,
    pub precision: Precision,
    /// Target absolute accuracy of the eigenvalues (time units); drives the
    /// automatic precision choice.
    pub tol: f64,
}

impl Default for DiscretizeOptions {
    fn default() -> Self {
        DiscretizeOptions {
            scheme: Scheme::ProductIntegration,
            precision: Precision::Auto,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
enum Storage {
    Double(Vec<f64>),
    DoubleDouble(Vec<DoubleDouble>),
}

/// `M = iA` on the Gauss–Legendre rule of `[−l, l]`.
#[derive(Debug, Clone)]
pub struct DiscretizedTOA {
    pub l: f64,
    pub rule: QuadratureRule,
    pub scheme: Scheme,
    /// Arithmetic actually used (never `Auto`).
    pub precision: Precision,
    pub kernel: KernelSpec,
    /// Frobenius norm of `A`.
    pub norm: f64,
    /// `norm × unit roundoff`: a-priori bound on eigenvalue rounding errors.
    pub rounding_bound: f64,
    pub warnings: Vec<Warning>,
    storage: Storage,
}

impl DiscretizedTOA {
    pub fn n(&self) -> usize {
        self.rule.len()
    }

    /// `A_ij`, so that `M_ij = i A_ij`.
    pub fn antisymmetric_entry(&self, i: usize, j: usize) -> f64 {
        let n = self.n();
        match &self.storage {
            Storage::Double(a) => a[i * n + j],
            Storage::DoubleDouble(a) => a[i * n + j].as_f64(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(0.0, self.antisymmetric_entry(i, j))
    }

    /// `max_ij |M_ij − conj(M_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.entry(i, j) - self.entry(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Box half-width containing the packet with [`BOX_PACKET_SIGMAS`] spreads of
/// margin on the side away from the origin.
pub fn suggested_box(spec: &WavepacketSpec) -> f64 {
    spec.q0.abs() + BOX_PACKET_SIGMAS * spec.sigma
}

/// Rows `w_i (2 C_ij − w_j)`: `Σ_j row_ij f(x_j) = w_i ∫ sgn(x_i − y) f(y) dy`
/// exactly for polynomials `f` of degree below `n`.
fn sign_rows<R: Real>(x: &[R], w: &[R]) -> Vec<Vec<R>> {
    let n = x.len();
    // p[k*n + j] = P_k(x_j) for k = 0..=n.
    let mut p = vec![R::zero(); (n + 1) * n];
    for j in 0..n {
        p[j] = R::one();
        p[n + j] = x[j];
        for k in 1..n {
            let kf = R::of_usize(k);
            p[(k + 1) * n + j] =
                (R::of_usize(2 * k + 1) * x[j] * p[k * n + j] - kf * p[(k - 1) * n + j]) / (kf + R::one());
        }
    }
    // ip[i*n + k] = (2k+1)/2 ∫_{−1}^{x_i} P_k.
    let mut ip = vec![R::zero(); n * n];
    for i in 0..n {
        ip[i * n] = R::of(0.5) * (x[i] + R::one());
        for k in 1..n {
            // (2k+1)/2 · (P_{k+1} − P_{k−1})/(2k+1)
            ip[i * n + k] = R::of(0.5) * (p[(k + 1) * n + i] - p[(k - 1) * n + i]);
        }
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![R::zero(); n];
            for k in 0..n {
                let c = ip[i * n + k];
                let pk = &p[k * n..(k + 1) * n];
                for j in 0..n {
                    row[j] += c * pk[j];
                }
            }
            for j in 0..n {
                // w_i (2 C_ij − w_j) with C_ij = w_j row[j]
                row[j] = w[i] * (R::of(2.0) * w[j] * row[j] - w[j]);
            }
            row
        })
        .collect()
}

/// `G` of the module docs on `[−1, 1]`, row-major.
fn product_weights<R: Real>(x: &[R], w: &[R]) -> Vec<R> {
    let n = x.len();
    let rows = sign_rows(x, w);
    let mut g = vec![R::zero(); n * n];
    for i in 0..n {
        for j in 0..i {
            let v = R::of(0.5) * (rows[i][j] - rows[j][i]);
            g[i * n + j] = v;
            g[j * n + i] = -v;
        }
    }
    g
}

/// `S(q, q')` in precision `R`; the growing region uses the positive series
/// in `R`, the oscillatory one the `f64` Bessel form.
fn symmetric_part<R: Real>(q: R, qp: R, spec: &KernelSpec) -> R {
    let s = q + qp;
    let d = q - qp;
    let c = R::of(spec.mass * spec.mass * spec.g / (4.0 * spec.hbar * spec.hbar));
    let arg = -(c * s * d * d);
    let f = if arg.as_f64() >= 0.0 {
        hyp0f1_2_nonneg(arg)
    } else {
        R::of(hyp0f1(2.0, arg.as_f64()))
    };
    R::of(0.25 * spec.mass / spec.hbar) * s * f
}

fn assemble<R: Real>(spec: &KernelSpec, l: f64, n: usize, scheme: Scheme) -> (Vec<R>, Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre_unit::<R>(n);
    let lr = R::of(l);
    let q: Vec<R> = x.iter().map(|&xi| lr * xi).collect();
    let g = match scheme {
        Scheme::ProductIntegration => product_weights(&x, &w),
        Scheme::Nystrom => {
            let mut g = vec![R::zero(); n * n];
            for i in 0..n {
                for j in 0..i {
                    g[i * n + j] = w[i] * w[j];
                    g[j * n + i] = -(w[i] * w[j]);
                }
            }
            g
        }
    };
    let rows: Vec<Vec<R>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..i)
                .map(|j| {
                    // l² G / √(l w_i · l w_j) = l G / √(w_i w_j)
                    let scale = lr * g[i * n + j] / (w[i] * w[j]).sqrt();
                    symmetric_part(q[i], q[j], spec) * scale
                })
                .collect()
        })
        .collect();
    let mut a = vec![R::zero(); n * n];
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            a[i * n + j] = v;
            a[j * n + i] = -v;
        }
    }
    let nodes = q.iter().map(|v| v.as_f64()).collect();
    let weights = w.iter().map(|v| (lr * *v).as_f64()).collect();
    (a, nodes, weights)
}

/// Cheap `f64` estimate of `‖A‖_F` from the Nyström proxy `S_ij √(w_i w_j)`.
fn norm_estimate(spec: &KernelSpec, l: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre_unit::<f64>(n);
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..i {
            let v = spec.symmetric_part(l * x[i], l * x[j]) * l * (w[i] * w[j]).sqrt();
            s += 2.0 * v * v;
        }
    }
    s.sqrt()
}

fn frobenius<R: Real>(a: &[R]) -> f64 {
    a.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt()
}

/// Largest quarter period (in `q − q'`) of the oscillating kernel on the
/// box, `πħ / (2μ√(2gl))`.
fn kernel_quarter_period(spec: &KernelSpec, l: f64) -> f64 {
    std::f64::consts::PI * spec.hbar / (2.0 * spec.mass * (2.0 * spec.g * l).sqrt())
}

/// Build the confined operator on `N` Gauss–Legendre nodes of `[−l, l]`.
pub fn discretize(spec: &KernelSpec, l: f64, n: usize, opts: &DiscretizeOptions) -> Result<DiscretizedTOA> {
    if !(l.is_finite() && l > 0.0) {
        return Err(QtoaError::invalid(format!("box half-width must be positive, got {l}")));
    }
    if n < MIN_NODES {
        return Err(QtoaError::invalid(format!("need at least {MIN_NODES} nodes, got {n}")));
    }
    if !(opts.tol > 0.0) {
        return Err(QtoaError::invalid("eigenvalue tolerance must be positive"));
    }
    let estimate = norm_estimate(spec, l, n);
    let precision = match opts.precision {
        Precision::Auto => {
            if estimate * f64::UNIT_ROUNDOFF <= opts.tol {
                Precision::Double
            } else {
                Precision::DoubleDouble
            }
        }
        p => p,
    };
    let unit = match precision {
        Precision::DoubleDouble => DoubleDouble::UNIT_ROUNDOFF,
        _ => f64::UNIT_ROUNDOFF,
    };
    if estimate * unit > opts.tol {
        return Err(QtoaError::PrecisionExhausted {
            norm: estimate,
            precision: if precision == Precision::Double { "double" } else { "double-double" },
            tol: opts.tol,
        });
    }
    let (storage, nodes, weights, norm) = match precision {
        Precision::DoubleDouble => {
            let (a, q, w) = assemble::<DoubleDouble>(spec, l, n, opts.scheme);
            let f = frobenius(&a);
            (Storage::DoubleDouble(a), q, w, f)
        }
        _ => {
            let (a, q, w) = assemble::<f64>(spec, l, n, opts.scheme);
            let f = frobenius(&a);
            (Storage::Double(a), q, w, f)
        }
    };
    let mut warnings = Vec::new();
    if spec.g > 0.0 {
        let spacing = nodes.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
        let scale = kernel_quarter_period(spec, l);
        if spacing > scale {
            warnings.push(Warning::UnderResolvedKernel { spacing, scale });
        }
    }
    Ok(DiscretizedTOA {
        l,
        rule: QuadratureRule {
            nodes,
            weights,
            interval: (-l, l),
        },
        scheme: opts.scheme,
        precision,
        kernel: *spec,
        norm,
        rounding_bound: norm * unit,
        warnings,
        storage,
    })
}

/// Shape of an eigenfunction at its arrival time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenTag {
    /// A single peak gathers at the arrival point.
    NonNodal,
    /// Two peaks close in on the arrival point, with a minimum between them.
    Nodal,
    /// Neither picture is clear.
    Indeterminate,
}

/// Eigenpairs ordered by increasing `|τ|` (negative first on ties).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub l: f64,
    pub rule: QuadratureRule,
    pub kernel: KernelSpec,
    pub values: Vec<f64>,
    /// `ψ_n(q_i)` at the rule nodes.
    pub amplitudes: Vec<Vec<Complex64>>,
    /// Filled in by [`Spectrum::classify_all`] or individually.
    pub tags: Vec<Option<EigenTag>>,
}

/// Diagonalise a discretised operator.
pub fn eigensystem(d: &DiscretizedTOA) -> Result<Spectrum> {
    let n = d.n();
    let eig = match &d.storage {
        Storage::Double(a) => skew_eigen(a.clone(), n)?,
        Storage::DoubleDouble(a) => skew_eigen(a.clone(), n)?,
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (eig.values[i], eig.values[j]);
        a.abs().total_cmp(&b.abs()).then(a.total_cmp(&b))
    });
    let inv_sqrt_w: Vec<f64> = d.rule.weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    let amplitudes = order
        .iter()
        .map(|&c| {
            let (re, im) = eig.vector(c);
            (0..n)
                .map(|i| Complex64::new(re[i], im[i]) * inv_sqrt_w[i])
                .collect()
        })
        .collect();
    Ok(Spectrum {
        l: d.l,
        rule: d.rule.clone(),
        kernel: d.kernel,
        values: order.iter().map(|&c| eig.values[c]).collect(),
        amplitudes,
        tags: vec![None; n],
    })
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Quadrature inner product `Σ w_i ψ̄_m(q_i) ψ_n(q_i)`.
    pub fn inner(&self, m: usize, n: usize) -> Complex64 {
        self.rule
            .weights
            .iter()
            .zip(&self.amplitudes[m])
            .zip(&self.amplitudes[n])
            .map(|((&w, a), b)| a.conj() * b * w)
            .sum()
    }

    /// `max_{m,n} |⟨ψ_m|ψ_n⟩ − δ_mn|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|m| {
                (0..=m)
                    .map(|k| {
                        let target = if k == m { 1.0 } else { 0.0 };
                        (self.inner(m, k) - target).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// The eigenfunction as an amplitude on the whole line (zero outside
    /// the box).
    pub fn eigenfunction(&self, k: usize) -> ComplexAmplitude {
        ComplexAmplitude::Legendre(LegendreAmplitude::new(self.l, self.amplitudes[k].clone()))
    }

    /// Index of the eigenvalue closest to `tau`.
    pub fn nearest(&self, tau: f64) -> usize {
        (0..self.len())
            .min_by(|&a, &b| (self.values[a] - tau).abs().total_cmp(&(self.values[b] - tau).abs()))
            .unwrap_or(0)
    }

    /// Classify the eigenfunctions whose index is in `range`.
    pub fn classify_range(&mut self, range: std::ops::Range<usize>, opts: &ArrivalOptions) {
        let tags: Vec<(usize, EigenTag)> = range
            .into_par_iter()
            .map(|k| (k, classify(self, k, opts)))
            .collect();
        for (k, t) in tags {
            self.tags[k] = Some(t);
        }
    }
}

/// `⟨ψ_n|φ⟩` for every eigenfunction, under the quadrature inner product.
pub fn overlaps(spectrum: &Spectrum, phi: &ComplexAmplitude) -> Vec<Complex64> {
    let samples: Vec<Complex64> = spectrum.rule.nodes.iter().map(|&q| phi.eval(q)).collect();
    spectrum
        .amplitudes
        .par_iter()
        .map(|psi| {
            psi.iter()
                .zip(&samples)
                .zip(&spectrum.rule.weights)
                .map(|((p, s), &w)| p.conj() * s * w)
                .sum()
        })
        .collect()
}

/// Spectral first moment of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMean {
    /// `Σ τ_n |⟨ψ_n|φ⟩|²`.
    pub mean: f64,
    /// `Σ |⟨ψ_n|φ⟩|²`.
    pub weight: f64,
    /// `Σ |τ_n| |⟨ψ_n|φ⟩|²`. Far above `|mean|` the sum cancels and loses
    /// `log10(absolute / |mean|)` digits (tails touching the box edge overlap
    /// the huge eigenvalues that live there).
    pub absolute: f64,
}

/// First moment of the eigenvalue distribution of `phi`.
pub fn spectral_expectation(spectrum: &Spectrum, phi: &ComplexAmplitude) -> SpectralMean {
    let c = overlaps(spectrum, phi);
    let mut out = SpectralMean {
        mean: 0.0,
        weight: 0.0,
        absolute: 0.0,
    };
    for (c, &t) in c.iter().zip(&spectrum.values) {
        let w = c.norm_sqr();
        out.mean += t * w;
        out.weight += w;
        out.absolute += t.abs() * w;
    }
    out
}

/// Controls for evolving eigenfunctions to their eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalOptions {
    /// Half-extent of the evolution grid in units of `l`.
    pub extent: f64,
    /// Number of points of the (periodic) evolution grid.
    pub points: usize,
    /// Half-width of the window around the arrival point, in units of `l`.
    pub window: f64,
}

impl Default for ArrivalOptions {
    fn default() -> Self {
        ArrivalOptions {
            extent: 8.0,
            points: 1 << 16,
            window: 0.03,
        }
    }
}

/// Dynamics to which the operator is conjugate: `H = p²/2μ − μ g q`.
pub fn arrival_dynamics(spec: &KernelSpec) -> LinearDynamics {
    LinearDynamics {
        mass: spec.mass,
        accel: -spec.g,
        hbar: spec.hbar,
    }
}

/// The density `|ψ(t, q)|²` on the evolution grid for an eigenfunction with
/// eigenvalue `tau`, evolved for time `t`. Eigenfunctions with `τ > 0` are
/// time-reversed first (conjugation maps `τ → −τ`), so every profile is the
/// approach to the arrival point.
fn evolved_density(spectrum: &Spectrum, k: usize, t: f64, opts: &ArrivalOptions) -> GridAmplitude {
    let tau = spectrum.values[k];
    let values = if tau > 0.0 {
        spectrum.amplitudes[k].iter().map(|v| v.conj()).collect()
    } else {
        spectrum.amplitudes[k].clone()
    };
    let psi = LegendreAmplitude::new(spectrum.l, values);
    let half = opts.extent * spectrum.l;
    let dq = 2.0 * half / opts.points as f64;
    let grid = GridAmplitude {
        q_min: -half,
        dq,
        values: (0..opts.points).map(|i| psi.eval(-half + dq * i as f64)).collect(),
    };
    propagate_grid(&grid, t, &arrival_dynamics(&spectrum.kernel))
}

fn smooth3(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(v.len() - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Extracted features of a density profile around the arrival point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileFeatures {
    pub tag: EigenTag,
    /// Smoothed density at the arrival point over the window maximum.
    pub centre_ratio: f64,
    /// `∫ d / max d` over the window.
    pub width: f64,
    /// `2 √⟨x²⟩` over the window.
    pub separation: f64,
}

/// Classify a density profile sampled at `xs` (ascending, uniform) within
/// `|x| ≤ half_window`: smoothed over three points, non-nodal when the
/// density at the origin is at least 3/4 of the window maximum, nodal when it
/// is below 1/4 with a maximum on each side at least four times higher.
pub fn classify_profile(xs: &[f64], density: &[f64], half_window: f64) -> ProfileFeatures {
    let idx: Vec<usize> = (0..xs.len()).filter(|&i| xs[i].abs() <= half_window).collect();
    let d = smooth3(&idx.iter().map(|&i| density[i]).collect::<Vec<_>>());
    let x: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
    if d.len() < 5 {
        return ProfileFeatures {
            tag: EigenTag::Indeterminate,
            centre_ratio: f64::NAN,
            width: f64::NAN,
            separation: f64::NAN,
        };
    }
    let dx = x[1] - x[0];
    let c = (0..x.len()).min_by(|&a, &b| x[a].abs().total_cmp(&x[b].abs())).unwrap_or(0);
    let max = d.iter().cloned().fold(0.0, f64::max);
    let centre_ratio = d[c] / max;
    let width = d.iter().sum::<f64>() * dx / max;
    let argmax = |r: std::ops::Range<usize>| r.max_by(|&a, &b| d[a].total_cmp(&d[b]));
    let left = argmax(0..c);
    let right = argmax(c + 1..d.len());
    let flanked = match (left, right) {
        (Some(l), Some(r)) => d[l] >= 4.0 * d[c] && d[r] >= 4.0 * d[c] && l > 0 && r + 1 < d.len(),
        _ => false,
    };
    // Twice the root-mean-square distance from the arrival point: the peak
    // separation for a symmetric pair, insensitive to which ripple of a
    // lobe happens to be highest.
    let mass: f64 = d.iter().sum();
    let second: f64 = d.iter().zip(&x).map(|(v, xi)| v * xi * xi).sum();
    let separation = 2.0 * (second / mass).sqrt();
    let tag = if centre_ratio >= 0.75 {
        EigenTag::NonNodal
    } else if centre_ratio <= 0.25 && flanked {
        EigenTag::Nodal
    } else {
        EigenTag::Indeterminate
    };
    ProfileFeatures {
        tag,
        centre_ratio,
        width,
        separation,
    }
}

fn features_at(spectrum: &Spectrum, k: usize, t: f64, opts: &ArrivalOptions) -> ProfileFeatures {
    let evolved = evolved_density(spectrum, k, t, opts);
    let xs: Vec<f64> = (0..evolved.values.len())
        .map(|i| evolved.q_min + evolved.dq * i as f64)
        .collect();
    let dens: Vec<f64> = evolved.values.iter().map(|v| v.norm_sqr()).collect();
    classify_profile(&xs, &dens, opts.window * spectrum.l)
}

/// Tag of eigenfunction `k`, from its profile at time `|τ_k|`.
pub fn classify(spectrum: &Spectrum, k: usize, opts: &ArrivalOptions) -> EigenTag {
    features_at(spectrum, k, spectrum.values[k].abs(), opts).tag
}

/// Width (non-nodal) or peak separation (nodal) over a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalMetrics {
    pub index: usize,
    pub eigenvalue: f64,
    pub tag: EigenTag,
    pub times: Vec<f64>,
    /// Width for non-nodal eigenfunctions, separation for nodal ones.
    pub metric: Vec<f64>,
    pub argmin_time: f64,
    /// Largest spacing of the time grid around the minimum.
    pub step: f64,
}

/// Evolve eigenfunction `k` over `times` and locate the minimum of its
/// width or peak separation.
pub fn unitary_arrival_metrics(
    spectrum: &Spectrum,
    k: usize,
    times: &[f64],
    opts: &ArrivalOptions,
) -> Result<ArrivalMetrics> {
    if times.len() < 3 || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(QtoaError::invalid("time grid must be non-negative, increasing, with ≥ 3 points"));
    }
    let tau = spectrum.values[k];
    let tag = spectrum.tags[k].unwrap_or_else(|| classify(spectrum, k, opts));
    let metric: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let f = features_at(spectrum, k, t, opts);
            match tag {
                EigenTag::Nodal => f.separation,
                _ => f.width,
            }
        })
        .collect();
    let i = (0..metric.len())
        .filter(|&i| metric[i].is_finite())
        .min_by(|&a, &b| metric[a].total_cmp(&metric[b]))
        .unwrap_or(0);
    let lo = i.saturating_sub(1);
    let hi = (i + 1).min(times.len() - 1);
    let step = (times[i] - times[lo]).max(times[hi] - times[i]);
    Ok(ArrivalMetrics {
        index: k,
        eigenvalue: tau,
        tag,
        times: times.to_vec(),
        metric,
        argmin_time: times[i],
        step,
    })
}

/// Adjacent same-sign eigenvalues with relative gap below `rel_gap`, one
/// nodal and one non-nodal, among the first `search` eigenvalues by `|τ|`
/// whose magnitude is at least `min_abs`. Classifies on demand.
pub fn find_nodal_pair(
    spectrum: &mut Spectrum,
    min_abs: f64,
    search: usize,
    rel_gap: f64,
    opts: &ArrivalOptions,
) -> Option<(usize, usize)> {
    let candidates: Vec<usize> = (0..spectrum.len())
        .filter(|&k| spectrum.values[k].abs() >= min_abs)
        .take(search)
        .collect();
    for w in candidates.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ta, tb) = (spectrum.values[a], spectrum.values[b]);
        if ta.signum() != tb.signum() || (ta - tb).abs() > rel_gap * ta.abs().max(tb.abs()) {
            continue;
        }
        for &k in &[a, b] {
            if spectrum.tags[k].is_none() {
                spectrum.tags[k] = Some(classify(spectrum, k, opts));
            }
        }
        let pair = (spectrum.tags[a], spectrum.tags[b]);
        if matches!(
            pair,
            (Some(EigenTag::Nodal), Some(EigenTag::NonNodal)) | (Some(EigenTag::NonNodal), Some(EigenTag::Nodal))
        ) {
            return Some((a, b));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_rows_are_exact_for_polynomials() {
        let n = 12;
        let (x, w) = gauss_legendre_unit::<f64>(n);
        let rows = sign_rows(&x, &w);
        for i in 0..n {
            let xi = x[i];
            // ∫_{−1}^{xi} y² dy − ∫_{xi}^{1} y² dy = 2 xi³ / 3
            let exact = 2.0 * xi.powi(3) / 3.0;
            let approx: f64 = (0..n).map(|j| rows[i][j] * x[j] * x[j]).sum::<f64>() / w[i];
            assert!((approx - exact).abs() < 1e-14, "{approx} {exact}");
        }
        let g = product_weights(&x, &w);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(g[i * n + j], -g[j * n + i]);
            }
        }
    }

    #[test]
    fn synthetic_profiles() {
        let xs: Vec<f64> = (0..201).map(|i| -1.0 + 0.01 * i as f64).collect();
        let single: Vec<f64> = xs.iter().map(|x| (-x * x / 0.02).exp()).collect();
        assert_eq!(classify_profile(&xs, &single, 0.5).tag, EigenTag::NonNodal);
        let double: Vec<f64> = xs.iter().map(|x| x * x * (-x * x / 0.02).exp()).collect();
        assert_eq!(classify_profile(&xs, &double, 0.5).tag, EigenTag::Nodal);
    }
}
