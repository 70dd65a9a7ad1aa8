//! Physical and numerical constants of a run.

use crate::error::{Error, Result};
use crate::potentials::PotentialSplit;

/// Which evolution law closes the boundary: Cahn-Hilliard-type (surface
/// diffusion of the boundary potential) or Allen-Cahn-type (relaxation).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcMode {
    CahnHilliard,
    AllenCahn,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    /// Bulk mobility.
    pub m: f64,
    /// Surface mobility.
    pub m_gamma: f64,
    /// Surface tension coefficient.
    pub sigma: f64,
    /// Bulk interface width.
    pub delta: f64,
    /// Surface interface width.
    pub delta_gamma: f64,
    /// Surface Dirichlet coefficient (may be zero).
    pub kappa: f64,
    /// Time increment.
    pub tau: f64,
    pub bc_mode: BcMode,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            m_gamma: 1.0,
            sigma: 1.0,
            delta: 1.0,
            delta_gamma: 1.0,
            kappa: 1.0,
            tau: 1e-3,
            bc_mode: BcMode::CahnHilliard,
        }
    }
}

impl ModelParams {
    /// Check positivity constraints; `surface` is needed because a vanishing
    /// kappa requires a strictly positive quadratic gain of the surface
    /// potential's concave part.
    pub fn validate(&self, surface: &PotentialSplit) -> Result<()> {
        let pos = [
            ("m", self.m),
            ("m_gamma", self.m_gamma),
            ("sigma", self.sigma),
            ("delta", self.delta),
            ("delta_gamma", self.delta_gamma),
            ("tau", self.tau),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::Config(format!(
                "kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        if self.kappa == 0.0 && surface.beta <= 0.0 {
            return Err(Error::Config(
                "kappa = 0 requires a surface potential with beta > 0".to_string(),
            ));
        }
        Ok(())
    }
}
