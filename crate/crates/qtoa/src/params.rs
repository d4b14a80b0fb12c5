//! Physical constants of a run.

use serde::{Deserialize, Serialize};

use crate::error::{QtoaError, Result};

/// Reduced Planck constant, field strength and the two masses.
///
/// Natural units (`ħ = g = μ = 1`) and SI inputs are both fine; nothing in
/// the library assumes a unit system. `g = 0` is accepted as the
/// free-particle limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub g: f64,
    pub m_inertial: f64,
    pub m_grav: f64,
}

/// Parameters after folding the mass ratio into the field strength: the
/// dynamics of a particle with masses `(mᵢ, m_g)` in field `g` equal those of
/// a particle with mass `mᵢ` in field `g m_g / mᵢ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effective {
    pub mass: f64,
    pub g: f64,
    pub hbar: f64,
}

impl PhysicalParams {
    pub fn new(hbar: f64, g: f64, m_inertial: f64, m_grav: f64) -> Result<Self> {
        let p = PhysicalParams {
            hbar,
            g,
            m_inertial,
            m_grav,
        };
        p.validate()?;
        Ok(p)
    }

    /// Equal inertial and gravitational mass `μ`.
    pub fn with_mass(hbar: f64, g: f64, mu: f64) -> Result<Self> {
        Self::new(hbar, g, mu, mu)
    }

    /// `ħ = g = μ = 1`.
    pub fn natural() -> Self {
        PhysicalParams {
            hbar: 1.0,
            g: 1.0,
            m_inertial: 1.0,
            m_grav: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(self.hbar) {
            return Err(QtoaError::invalid(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            return Err(QtoaError::invalid(format!("g must be non-negative, got {}", self.g)));
        }
        if !ok(self.m_inertial) || !ok(self.m_grav) {
            return Err(QtoaError::invalid(format!(
                "masses must be positive, got m_inertial={} m_grav={}",
                self.m_inertial, self.m_grav
            )));
        }
        Ok(())
    }

    /// Effective mass and field after the `μ → mᵢ`, `g → m_g g / mᵢ`
    /// substitution (the identity when the masses agree).
    pub fn effective(&self) -> Effective {
        Effective {
            mass: self.m_inertial,
            g: if self.m_inertial == self.m_grav {
                self.g
            } else {
                self.g * self.m_grav / self.m_inertial
            },
            hbar: self.hbar,
        }
    }

    /// Same run with a different field strength.
    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }
}

/// Replace the masses of `params` by `(mi, mg)`; every downstream quantity
/// then sees `μ = mi` and `g_eff = g mg / mi`.
pub fn with_mass_split(params: &PhysicalParams, mi: f64, mg: f64) -> Result<PhysicalParams> {
    PhysicalParams::new(params.hbar, params.g, mi, mg)
}
