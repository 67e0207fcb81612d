//! Physical constants and Sobolev indices.

use crate::error::{Error, Result};

/// Sobolev index `(s, r)` used by the diagnostic norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevIndex {
    /// Integer regularity.
    pub s: u32,
    /// Integrability exponent.
    pub r: f64,
}

impl Default for SobolevIndex {
    /// `s = 4`, `r = 3/2`: the smallest integer `s` with `s > 3/r + 1`.
    fn default() -> Self {
        Self { s: 4, r: 1.5 }
    }
}

impl SobolevIndex {
    /// Checks `1 < r < ∞`.
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 1.0 && self.r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "integrability r must satisfy 1 < r < inf, got {}",
                self.r
            )));
        }
        Ok(())
    }
}

/// Physical parameters of the free-boundary problem (density fixed to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    /// Gravitational acceleration `𝔤 > 0`.
    pub gravity: f64,
    /// Viscosity `μ > 0`.
    pub viscosity: f64,
    /// Surface tension `κ > 0`.
    pub surface_tension: f64,
    /// Slab depth `b > 0`.
    pub depth: f64,
    /// Wave speed `γ` (0 for stationary waves).
    pub gamma: f64,
    /// Diagnostic Sobolev index.
    pub index: SobolevIndex,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            gravity: 1.0,
            viscosity: 1.0,
            surface_tension: 1.0,
            depth: 1.0,
            gamma: 0.0,
            index: SobolevIndex::default(),
        }
    }
}

impl Params {
    /// Checks strict positivity of `𝔤, μ, κ, b` and finiteness of `γ`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gravity", self.gravity),
            ("viscosity", self.viscosity),
            ("surface_tension", self.surface_tension),
            ("depth", self.depth),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.gamma.is_finite() {
            return Err(Error::InvalidArgument("wave speed gamma must be finite".into()));
        }
        self.index.validate()
    }

    /// Copy with a different wave speed.
    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }
}
