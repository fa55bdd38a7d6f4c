use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of one kicked-rotor run.
///
/// The kicking potential is `V(θ) = K [cos θ + i λ sin θ]`, the free rotation
/// is `exp(-i p² / 2ħ)`, and the initial state is a Gaussian of width
/// parameter `σ` centred at `θ = 0`. `λ = 0` is the Hermitian kicked rotor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Kick strength `K`.
    pub kick_strength: f64,
    /// Strength `λ` of the imaginary part of the kick.
    pub non_hermiticity: f64,
    /// Effective Planck constant; also the momentum lattice spacing.
    pub hbar: f64,
    /// Width parameter of the initial Gaussian `exp(-σθ²/2)`.
    pub sigma: f64,
    /// Dimension `N` of the momentum space.
    pub dim: usize,
    /// Number of kicks.
    pub n_kicks: usize,
}

impl Default for SimParams {
    /// `K = 2π`, `λ = 0.9`, `ħ = 0.1`, `σ = 10`, `N = 2¹³`, ten kicks.
    fn default() -> Self {
        SimParams {
            kick_strength: 2.0 * PI,
            non_hermiticity: 0.9,
            hbar: 0.1,
            sigma: 10.0,
            dim: 1 << 13,
            n_kicks: 10,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kick_strength.is_finite() && self.kick_strength > 0.0) {
            return Err(Error::invalid("kick_strength", "must be finite and > 0"));
        }
        if !(self.non_hermiticity.is_finite() && self.non_hermiticity >= 0.0) {
            return Err(Error::invalid("non_hermiticity", "must be finite and >= 0"));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::invalid("hbar", "must be finite and > 0"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::invalid("sigma", "must be finite and > 0"));
        }
        if self.dim < 2 || !self.dim.is_power_of_two() {
            return Err(Error::invalid(
                "dim",
                format!("must be a power of two >= 2, got {}", self.dim),
            ));
        }
        if self.n_kicks == 0 {
            return Err(Error::invalid("n_kicks", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_dim(self, dim: usize) -> Self {
        SimParams { dim, ..self }
    }

    pub fn with_non_hermiticity(self, lambda: f64) -> Self {
        SimParams {
            non_hermiticity: lambda,
            ..self
        }
    }

    /// `Kλ/ħ`, the log of the largest per-kick amplitude gain (reached at `θ = π/2`).
    pub fn kick_log_gain(&self) -> f64 {
        self.kick_strength * self.non_hermiticity / self.hbar
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SimParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let p = SimParams::default();
        assert!(p.with_dim(3).validate().is_err());
        assert!(p.with_dim(12).validate().is_err());
        assert!(p.with_dim(0).validate().is_err());
        assert!(p.with_non_hermiticity(-0.1).validate().is_err());
        assert!(SimParams { hbar: 0.0, ..p }.validate().is_err());
        assert!(SimParams { sigma: -1.0, ..p }.validate().is_err());
        assert!(SimParams {
            kick_strength: 0.0,
            ..p
        }
        .validate()
        .is_err());
        assert!(SimParams { n_kicks: 0, ..p }.validate().is_err());
        assert!(p.with_non_hermiticity(0.0).validate().is_ok());
    }

    #[test]
    fn log_gain_at_default_point() {
        let g = SimParams::default().kick_log_gain();
        assert!((g - 56.548_667_764_616_28).abs() < 1e-10);
    }
}
