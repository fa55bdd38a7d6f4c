//! Grids, wavefunction storage and the position/momentum transform.
//!
//! Position amplitudes are stored as `a_j = √Δθ · ψ(θ_j)` on `θ_j = -π + 2πj/N`,
//! so `Σ|a_j|²` is the norm directly. Momentum amplitudes are stored in
//! ascending order `n = -N/2, …, N/2 - 1` with `p_n = nħ`. The transform is the
//! unitary DFT `ψ_n = N^{-1/2} Σ_j a_j e^{-i n θ_j}`, which is the discrete form
//! of projecting on the plane waves `e^{inθ}/√(2π)`.
//!
//! Amplitudes can grow by `e^{56}` per kick in the broken phase, so every
//! state carries a `log_scale`: the physical state is `amplitudes · e^{log_scale}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SimParams;

/// Amplitude magnitude beyond which it is folded into `log_scale`.
const RESCALE_ABOVE: f64 = 1e100;
const RESCALE_BELOW: f64 = 1e-100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Representation {
    Position,
    Momentum,
}

/// Paired angle and momentum lattices with cached FFT plans.
#[derive(Clone)]
pub struct Grid {
    theta: Vec<f64>,
    momentum: Vec<f64>,
    hbar: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("hbar", &self.hbar)
            .finish()
    }
}

impl Grid {
    pub fn new(dim: usize, hbar: f64) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidDimension(dim));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::invalid("hbar", "must be finite and > 0"));
        }
        let half = (dim / 2) as i64;
        // (2j - N)π/N keeps θ_{N-j} = -θ_j bit-exact.
        let theta = (0..dim)
            .map(|j| (2 * j as i64 - dim as i64) as f64 * PI / dim as f64)
            .collect();
        let momentum = (0..dim).map(|k| (k as i64 - half) as f64 * hbar).collect();
        let mut planner = FftPlanner::new();
        Ok(Grid {
            theta,
            momentum,
            hbar,
            fft: planner.plan_fft_forward(dim),
            ifft: planner.plan_fft_inverse(dim),
        })
    }

    pub fn from_params(params: &SimParams) -> Result<Self> {
        Grid::new(params.dim, params.hbar)
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Angles `θ_j` in `[-π, π)`, ascending.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Momenta `p_n = nħ` for `n = -N/2 … N/2-1`, ascending.
    pub fn momentum(&self) -> &[f64] {
        &self.momentum
    }

    pub fn theta_spacing(&self) -> f64 {
        2.0 * PI / self.dim() as f64
    }

    /// Integer momentum index `n` of storage slot `k`.
    pub fn momentum_index(&self, k: usize) -> i64 {
        k as i64 - (self.dim() / 2) as i64
    }

    /// Storage slot of `θ_{N-j} = -θ_j` (slot 0, `θ = -π`, is its own mirror).
    pub fn mirror_index(&self, j: usize) -> usize {
        (self.dim() - j) % self.dim()
    }

    /// Initial wavepacket `(σ/π)^{1/4} exp(-σθ²/2)`, sampled and normalized to 1.
    pub fn gaussian(&self, sigma: f64) -> Result<WaveState> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid("sigma", "must be finite and > 0"));
        }
        let amplitudes = self.gaussian_samples(sigma);
        WaveState::new(amplitudes, Representation::Position).with_norm(1.0)
    }

    /// Norm of the sampled continuum Gaussian before renormalization. Close
    /// to 1 whenever the wavepacket is well inside `[-π, π)`.
    pub fn gaussian_sampled_norm(&self, sigma: f64) -> f64 {
        self.gaussian_samples(sigma)
            .iter()
            .map(|a| a.norm_sqr())
            .sum()
    }

    fn gaussian_samples(&self, sigma: f64) -> Vec<Complex64> {
        let prefactor = (sigma / PI).powf(0.25) * self.theta_spacing().sqrt();
        self.theta
            .iter()
            .map(|&t| Complex64::new(prefactor * (-0.5 * sigma * t * t).exp(), 0.0))
            .collect()
    }

    pub fn to_momentum(&self, state: &WaveState) -> Result<WaveState> {
        state.expect(Representation::Position)?;
        self.check_dim(state)?;
        let mut out = state.clone();
        self.forward_in_place(&mut out.amplitudes);
        out.representation = Representation::Momentum;
        Ok(out)
    }

    pub fn to_position(&self, state: &WaveState) -> Result<WaveState> {
        state.expect(Representation::Momentum)?;
        self.check_dim(state)?;
        let mut out = state.clone();
        self.inverse_in_place(&mut out.amplitudes);
        out.representation = Representation::Position;
        Ok(out)
    }

    /// Converts to `target` if the state is not already there.
    pub fn represent(&self, state: &WaveState, target: Representation) -> Result<WaveState> {
        match (state.representation, target) {
            (a, b) if a == b => Ok(state.clone()),
            (Representation::Position, Representation::Momentum) => self.to_momentum(state),
            _ => self.to_position(state),
        }
    }

    pub(crate) fn check_dim(&self, state: &WaveState) -> Result<()> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: state.dim(),
            });
        }
        Ok(())
    }

    // ψ_k = (-1)^{k+N/2} N^{-1/2} Σ_j (-1)^j a_j e^{-2πikj/N}, the shifted-index DFT.
    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        let half_parity = (self.dim() / 2) % 2;
        flip_odd(buf, 0);
        self.fft.process(buf);
        let scale = (self.dim() as f64).sqrt().recip();
        for (k, a) in buf.iter_mut().enumerate() {
            *a *= if (k + half_parity).is_multiple_of(2) {
                scale
            } else {
                -scale
            };
        }
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        let half_parity = (self.dim() / 2) % 2;
        flip_odd(buf, half_parity);
        self.ifft.process(buf);
        let scale = (self.dim() as f64).sqrt().recip();
        for (j, a) in buf.iter_mut().enumerate() {
            *a *= if j % 2 == 0 { scale } else { -scale };
        }
    }
}

/// Negates entries whose `(index + offset)` is odd.
fn flip_odd(buf: &mut [Complex64], offset: usize) {
    for (i, a) in buf.iter_mut().enumerate() {
        if (i + offset) % 2 == 1 {
            *a = -*a;
        }
    }
}

/// Wavefunction snapshot in one representation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    amplitudes: Vec<Complex64>,
    representation: Representation,
    log_scale: f64,
    target_norm: f64,
}

impl WaveState {
    /// Wraps raw amplitudes. The target norm starts at the current norm.
    pub fn new(amplitudes: Vec<Complex64>, representation: Representation) -> Self {
        let mut state = WaveState {
            amplitudes,
            representation,
            log_scale: 0.0,
            target_norm: 1.0,
        };
        state.rebalance();
        let norm = state.norm_squared();
        if norm.is_finite() && norm > 0.0 {
            state.target_norm = norm;
        }
        state
    }

    pub fn from_parts(
        amplitudes: Vec<Complex64>,
        representation: Representation,
        log_scale: f64,
    ) -> Self {
        let mut state = WaveState::new(amplitudes, representation);
        state.log_scale += log_scale;
        state
    }

    /// Unit-norm basis state at storage slot `index`.
    pub fn basis(dim: usize, index: usize, representation: Representation) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        WaveState::new(amplitudes, representation)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// The `⟨s|s⟩` value this state was last pinned to.
    pub fn target_norm(&self) -> f64 {
        self.target_norm
    }

    /// Physical amplitudes `amplitudes · e^{log_scale}`; may overflow.
    pub fn physical_amplitudes(&self) -> Vec<Complex64> {
        let s = self.log_scale.exp();
        self.amplitudes.iter().map(|a| a * s).collect()
    }

    /// `Σ|a|²` of the stored amplitudes, ignoring `log_scale`.
    pub fn stored_norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨ψ|ψ⟩` of the physical state.
    pub fn norm_squared(&self) -> f64 {
        self.stored_norm_squared() * (2.0 * self.log_scale).exp()
    }

    /// `ln⟨ψ|ψ⟩`, finite even when [`norm_squared`](Self::norm_squared) overflows.
    pub fn log_norm_squared(&self) -> f64 {
        self.stored_norm_squared().ln() + 2.0 * self.log_scale
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &WaveState) -> Result<Complex64> {
        other.expect(self.representation)?;
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let sum: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(u, v)| u.conj() * v)
            .sum();
        Ok(sum * (self.log_scale + other.log_scale).exp())
    }

    /// Rescales so that `⟨ψ|ψ⟩ = target`, folding `log_scale` back to zero.
    pub fn with_norm(mut self, target: f64) -> Result<Self> {
        self.set_norm(target)?;
        Ok(self)
    }

    pub fn set_norm(&mut self, target: f64) -> Result<()> {
        if !(target.is_finite() && target > 0.0) {
            return Err(Error::invalid(
                "target",
                "norm target must be finite and > 0",
            ));
        }
        let stored = self.stored_norm_squared();
        if stored == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if !stored.is_finite() {
            return Err(Error::NonFinite("renormalization"));
        }
        let factor = (target / stored).sqrt();
        for a in &mut self.amplitudes {
            *a *= factor;
        }
        self.log_scale = 0.0;
        self.target_norm = target;
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.log_scale.is_finite()
            && self
                .amplitudes
                .iter()
                .all(|a| a.re.is_finite() && a.im.is_finite())
    }

    pub(crate) fn expect(&self, representation: Representation) -> Result<()> {
        if self.representation != representation {
            return Err(Error::RepresentationMismatch {
                expected: representation,
                found: self.representation,
            });
        }
        Ok(())
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub(crate) fn add_log_scale(&mut self, delta: f64) {
        self.log_scale += delta;
    }

    pub(crate) fn set_representation(&mut self, representation: Representation) {
        self.representation = representation;
    }

    /// Moves magnitude into `log_scale` once the largest amplitude leaves
    /// `[1e-100, 1e100]`.
    pub(crate) fn rebalance(&mut self) {
        let max = self
            .amplitudes
            .iter()
            .map(|a| a.norm())
            .fold(0.0_f64, f64::max);
        if max > 0.0 && max.is_finite() && !(RESCALE_BELOW..=RESCALE_ABOVE).contains(&max) {
            let inv = max.recip();
            for a in &mut self.amplitudes {
                *a *= inv;
            }
            self.log_scale += max.ln();
        }
    }
}
