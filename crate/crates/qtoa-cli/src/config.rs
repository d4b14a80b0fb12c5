//! Run configuration: one TOML file with a section per stage.
//!
//! Every section is optional and falls back to the reference run
//! (`ħ = g = μ = 1`, `q0 = −5`, `v0 = 30`, `σ² = 0.1`). Unknown keys are
//! rejected everywhere.

use std::path::Path;

use qtoa::classical::{classical_toa, ArrivalBranch};
use qtoa::distribution::{Broadening, SpectrumSettings, SweepAxes, TauGrid};
use qtoa::expectation::QuadControl;
use qtoa::numerics::{CutSide, Precision};
use qtoa::spectral::{DiscretizeOptions, Scheme, MIN_NODES};
use qtoa::states::WavepacketSpec;
use qtoa::PhysicalParams;
use serde::{Deserialize, Serialize};

/// Invalid or unreadable configuration.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Free-form label copied into the manifest.
    pub experiment: String,
    pub physics: Physics,
    pub state: State,
    pub expectation: ExpectationSection,
    pub semiclassical: SemiclassicalSection,
    pub spectrum: SpectrumSection,
    pub distribution: DistributionSection,
    pub evolve: EvolveSection,
    pub sweep: Option<SweepSection>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: "custom".into(),
            physics: Physics::default(),
            state: State::default(),
            expectation: ExpectationSection::default(),
            semiclassical: SemiclassicalSection::default(),
            spectrum: SpectrumSection::default(),
            distribution: DistributionSection::default(),
            evolve: EvolveSection::default(),
            sweep: None,
        }
    }
}

/// `mass` sets equal inertial and gravitational masses; `m_inertial` and
/// `m_grav` set them separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Physics {
    pub hbar: f64,
    pub g: f64,
    pub mass: Option<f64>,
    pub m_inertial: Option<f64>,
    pub m_grav: Option<f64>,
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            hbar: 1.0,
            g: 1.0,
            mass: None,
            m_inertial: None,
            m_grav: None,
        }
    }
}

impl Physics {
    pub fn params(&self) -> Result<PhysicalParams, ConfigError> {
        let (mi, mg) = match (self.mass, self.m_inertial, self.m_grav) {
            (Some(m), None, None) => (m, m),
            (None, Some(mi), Some(mg)) => (mi, mg),
            (None, None, None) => (1.0, 1.0),
            _ => return bad("physics: give either `mass` or both `m_inertial` and `m_grav`"),
        };
        PhysicalParams::new(self.hbar, self.g, mi, mg).map_err(|e| ConfigError(format!("physics: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct State {
    pub q0: f64,
    pub v0: f64,
    pub sigma2: f64,
}

impl Default for State {
    fn default() -> Self {
        State {
            q0: -5.0,
            v0: 30.0,
            sigma2: 0.1,
        }
    }
}

impl State {
    pub fn spec(&self) -> Result<WavepacketSpec, ConfigError> {
        WavepacketSpec::from_variance(self.q0, self.sigma2, self.v0).map_err(|e| ConfigError(format!("state: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Direct double integral.
    Exact,
    /// Centre/difference variables with the oscillation handled analytically.
    Centered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpectationSection {
    pub route: Route,
    pub tol: f64,
    pub order: usize,
    pub max_halvings: usize,
    pub max_panel_fraction: f64,
}

impl Default for ExpectationSection {
    fn default() -> Self {
        let q = QuadControl::default();
        ExpectationSection {
            route: Route::Exact,
            tol: q.tol,
            order: q.order,
            max_halvings: q.max_halvings,
            max_panel_fraction: q.max_panel_fraction,
        }
    }
}

impl ExpectationSection {
    pub fn control(&self) -> QuadControl {
        QuadControl {
            tol: self.tol,
            order: self.order,
            max_halvings: self.max_halvings,
            max_panel_fraction: self.max_panel_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiclassicalSection {
    /// Highest order of the closed-form Gaussian expansion to tabulate.
    pub r_max: usize,
    /// Side of the `z > 1` branch cut used beyond the turning point.
    pub side: CutSide,
}

impl Default for SemiclassicalSection {
    fn default() -> Self {
        SemiclassicalSection {
            r_max: 4,
            side: CutSide::Below,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// Box half-width; omitted means "fit the packet".
    pub l: Option<f64>,
    pub nodes: usize,
    pub scheme: Scheme,
    pub precision: Precision,
    /// Target absolute eigenvalue accuracy.
    pub tol: f64,
    /// Classify this many eigenfunctions (smallest `|τ|` first).
    pub classify: usize,
    /// Write amplitude tables for this many eigenfunctions.
    pub export: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        let s = SpectrumSettings::default();
        SpectrumSection {
            l: s.l,
            nodes: s.nodes,
            scheme: s.discretize.scheme,
            precision: s.discretize.precision,
            tol: s.discretize.tol,
            classify: 0,
            export: 4,
        }
    }
}

impl SpectrumSection {
    pub fn settings(&self) -> SpectrumSettings {
        SpectrumSettings {
            l: self.l,
            nodes: self.nodes,
            discretize: DiscretizeOptions {
                scheme: self.scheme,
                precision: self.precision,
                tol: self.tol,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionSection {
    /// τ-grid; omitted bounds are centred on the classical arrival time.
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub points: usize,
    pub broadening: Broadening,
    /// Evolution times for the time-translation check.
    pub covariance_times: Vec<f64>,
}

impl Default for DistributionSection {
    fn default() -> Self {
        DistributionSection {
            tau_min: None,
            tau_max: None,
            points: 2001,
            broadening: Broadening::default(),
            covariance_times: vec![0.05, 0.1],
        }
    }
}

impl DistributionSection {
    /// The configured grid, or ±10 estimated spreads around the classical
    /// arrival time of the packet centre.
    pub fn grid(&self, state: &State, params: &PhysicalParams) -> Result<TauGrid, ConfigError> {
        let grid = match (self.tau_min, self.tau_max) {
            (Some(min), Some(max)) => TauGrid {
                min,
                max,
                points: self.points,
            },
            (None, None) => {
                let e = params.effective();
                let centre = classical_toa(params, state.q0, state.v0, ArrivalBranch::First)
                    .map_err(|e| ConfigError(format!("distribution: {e}")))?
                    .re;
                let sigma = state.sigma2.sqrt();
                let dv = e.hbar / (2.0 * e.mass * sigma);
                let spread = (sigma / state.v0.abs()).hypot(state.q0.abs().max(sigma) * dv / (state.v0 * state.v0));
                TauGrid {
                    min: centre - 10.0 * spread,
                    max: centre + 10.0 * spread,
                    points: self.points,
                }
            }
            _ => return bad("distribution: give both `tau_min` and `tau_max` or neither"),
        };
        grid.validate().map_err(|e| ConfigError(format!("distribution: {e}")))?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicsChoice {
    /// Particle falling in the field.
    Field,
    /// The flow under which arrival-time distributions translate rigidly.
    ToaConjugate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub times: Vec<f64>,
    /// Position grid; omitted bounds cover the evolved packet's window at
    /// every requested time.
    pub q_min: Option<f64>,
    pub q_max: Option<f64>,
    pub points: usize,
    pub dynamics: DynamicsChoice,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            times: vec![0.0, 0.05, 0.1, 0.15],
            q_min: None,
            q_max: None,
            points: 1001,
            dynamics: DynamicsChoice::Field,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Correction,
    Distribution,
}

/// Axes left out default to the single value of the base run; an axis given
/// as an empty list is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub output: SweepKind,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    #[serde(default)]
    pub mass_ratio: Option<Vec<f64>>,
    #[serde(default)]
    pub v0: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma2: Option<Vec<f64>>,
    #[serde(default)]
    pub q0: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        // serde drops extra keys next to the tag of a unit variant
        // (`kind = "gap"`) even with `deny_unknown_fields`; any key that does
        // not survive the round trip was ignored and is rejected here.
        let raw: toml::Table = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        let back = toml::Table::try_from(&cfg).map_err(|e| ConfigError(e.to_string()))?;
        if let Some(key) = ignored_key(&raw, &back, "") {
            return bad(format!("unknown field `{key}`"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply `--tolerance`: the quadrature tolerance of expectation runs and
    /// the eigenvalue accuracy target of spectral runs.
    pub fn with_tolerance(mut self, tol: f64) -> Result<Self, ConfigError> {
        if !(tol > 0.0 && tol < 1.0) {
            return bad(format!("--tolerance must lie in (0, 1), got {tol}"));
        }
        self.expectation.tol = tol;
        self.spectrum.tol = tol;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.physics.params()?;
        self.state.spec()?;
        let e = &self.expectation;
        if !(e.tol > 0.0 && e.tol < 1.0) {
            return bad("expectation.tol must lie in (0, 1)");
        }
        if !(2..=64).contains(&e.order) {
            return bad("expectation.order must lie in 2..=64");
        }
        if e.max_halvings > 12 {
            return bad("expectation.max_halvings must be at most 12");
        }
        if !(e.max_panel_fraction > 0.0 && e.max_panel_fraction <= 1.0) {
            return bad("expectation.max_panel_fraction must lie in (0, 1]");
        }
        if !(1..=12).contains(&self.semiclassical.r_max) {
            return bad("semiclassical.r_max must lie in 1..=12");
        }
        let s = &self.spectrum;
        if let Some(l) = s.l {
            if !(l > 0.0 && l.is_finite()) {
                return bad("spectrum.l must be positive");
            }
        }
        if !(MIN_NODES..=4096).contains(&s.nodes) {
            return bad(format!("spectrum.nodes must lie in {MIN_NODES}..=4096"));
        }
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return bad("spectrum.tol must lie in (0, 1)");
        }
        if s.classify > s.nodes || s.export > s.nodes {
            return bad("spectrum.classify and spectrum.export must not exceed spectrum.nodes");
        }
        let d = &self.distribution;
        if d.points < 2 || d.points > 1_000_000 {
            return bad("distribution.points must lie in 2..=1000000");
        }
        if let (Some(a), Some(b)) = (d.tau_min, d.tau_max) {
            if !(b > a) {
                return bad("distribution.tau_max must exceed tau_min");
            }
        }
        if d.covariance_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("distribution.covariance_times must be non-negative");
        }
        let v = &self.evolve;
        if v.times.is_empty() || v.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("evolve.times must be a non-empty list of non-negative times");
        }
        if v.points < 2 || v.points > 1_000_000 {
            return bad("evolve.points must lie in 2..=1000000");
        }
        match (v.q_min, v.q_max) {
            (Some(a), Some(b)) if !(b > a) => return bad("evolve.q_max must exceed q_min"),
            (Some(_), None) | (None, Some(_)) => return bad("evolve: give both `q_min` and `q_max` or neither"),
            _ => {}
        }
        if let Some(sw) = &self.sweep {
            self.sweep_axes(sw)?;
        }
        Ok(())
    }

    /// Sweep axes with omitted ones filled from the base run.
    pub fn sweep_axes(&self, sw: &SweepSection) -> Result<SweepAxes, ConfigError> {
        let p = self.physics.params()?;
        let axis = |name: &str, given: &Option<Vec<f64>>, base: f64| -> Result<Vec<f64>, ConfigError> {
            match given {
                Some(v) if v.is_empty() => bad(format!("sweep.{name} is empty")),
                Some(v) if v.iter().any(|x| !x.is_finite()) => bad(format!("sweep.{name} has a non-finite entry")),
                Some(v) => Ok(v.clone()),
                None => Ok(vec![base]),
            }
        };
        let axes = SweepAxes {
            mu: axis("mu", &sw.mu, p.m_inertial)?,
            mass_ratio: axis("mass_ratio", &sw.mass_ratio, p.m_inertial / p.m_grav)?,
            v0: axis("v0", &sw.v0, self.state.v0)?,
            sigma2: axis("sigma2", &sw.sigma2, self.state.sigma2)?,
            q0: axis("q0", &sw.q0, self.state.q0)?,
        };
        if axes.mu.iter().chain(&axes.mass_ratio).chain(&axes.sigma2).any(|x| *x <= 0.0) {
            return bad("sweep: mu, mass_ratio and sigma2 must be positive");
        }
        Ok(axes)
    }
}

fn ignored_key(raw: &toml::Table, parsed: &toml::Table, prefix: &str) -> Option<String> {
    for (k, v) in raw {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (v, parsed.get(k)) {
            (_, None) => return Some(path),
            (toml::Value::Table(a), Some(toml::Value::Table(b))) => {
                if let Some(p) = ignored_key(a, b, &path) {
                    return Some(p);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_run() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.physics.params().unwrap(), PhysicalParams::natural());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("colour = 1").is_err());
        assert!(RunConfig::parse("[state]\nq1 = 2.0").is_err());
        assert!(RunConfig::parse("[distribution]\nbroadening = { kind = \"gap\", h = 1.0 }").is_err());
    }

    #[test]
    fn mass_forms_are_exclusive() {
        assert!(RunConfig::parse("[physics]\nmass = 2.0\nm_grav = 1.0").is_err());
        let cfg = RunConfig::parse("[physics]\nm_inertial = 2.0\nm_grav = 1.0").unwrap();
        let p = cfg.physics.params().unwrap();
        assert_eq!((p.m_inertial, p.m_grav), (2.0, 1.0));
    }

    #[test]
    fn sweep_axes_default_to_the_base_run() {
        let cfg = RunConfig::parse("[sweep]\noutput = \"correction\"\nv0 = [20.0, 30.0]").unwrap();
        let axes = cfg.sweep_axes(cfg.sweep.as_ref().unwrap()).unwrap();
        assert_eq!(axes.v0, vec![20.0, 30.0]);
        assert_eq!(axes.q0, vec![-5.0]);
        assert_eq!(axes.mass_ratio, vec![1.0]);
        assert!(RunConfig::parse("[sweep]\noutput = \"correction\"\nv0 = []").is_err());
    }

    #[test]
    fn default_grid_brackets_the_arrival() {
        let cfg = RunConfig::default();
        let p = cfg.physics.params().unwrap();
        let g = cfg.distribution.grid(&cfg.state, &p).unwrap();
        assert!(g.min < -0.1662 && g.max > -0.1662);
        assert!(g.max - g.min < 0.5);
    }

    #[test]
    fn tolerance_override() {
        let cfg = RunConfig::default().with_tolerance(1e-6).unwrap();
        assert_eq!(cfg.expectation.tol, 1e-6);
        assert_eq!(cfg.spectrum.tol, 1e-6);
        assert!(RunConfig::default().with_tolerance(0.0).is_err());
    }
}
