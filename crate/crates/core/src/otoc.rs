//! Echo protocols for `C(t) = -⟨[θ(t), p^m]²⟩`.
//!
//! With `ψ_R = U†ᵗ θ Uᵗ ψ` and `φ_R = U†ᵗ θ Uᵗ p^m ψ` the correlator splits as
//! `C = C₁ + C₂ - 2 Re C₃` where
//!
//! * `C₁ = ⟨ψ_R| p^{2m} |ψ_R⟩`
//! * `C₂ = ⟨φ_R|φ_R⟩`
//! * `C₃ = ⟨ψ_R| p^m |φ_R⟩`
//!
//! Each echo runs forward to the pivot, multiplies by `θ`, then runs the
//! adjoint map back to `t_0`. Under [`Normalization::Pinned`] every forward
//! step is pinned to the norm of the state the forward run started from, and
//! every backward step to the norm of the `θ`-multiplied state at the pivot.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{Direction, NormPolicy, PhaseFactors, TrajectoryRecord};
use crate::observables::{self, Axis, Observable, PowerLawFit};
use crate::params::SimParams;
use crate::spectral::{Grid, Representation, WaveState};

/// One OTOC evaluation: power `m` of `B = p^m` and the echo pivot `t_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtocRequest {
    pub params: SimParams,
    pub m: u32,
    pub pivot: usize,
}

impl OtocRequest {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.m == 0 {
            return Err(Error::invalid("m", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Renormalize after every step as described in the module docs.
    Pinned,
    /// Raw evolution; `C = C₁ + C₂ - 2 Re C₃` is then an operator identity.
    Unnormalized,
}

/// Multiplies by the grid angle `θ_j ∈ [-π, π)`. The norm is left as is.
pub fn apply_theta(grid: &Grid, state: &WaveState) -> Result<WaveState> {
    let mut s = grid.represent(state, Representation::Position)?;
    for (a, t) in s.amplitudes_mut().iter_mut().zip(grid.theta()) {
        *a *= t;
    }
    Ok(s)
}

/// Multiplies by `p_n^m` in momentum representation. The norm is left as is.
pub fn apply_p_power(grid: &Grid, state: &WaveState, m: u32) -> Result<WaveState> {
    let mut s = grid.represent(state, Representation::Momentum)?;
    if m > 0 {
        for (a, p) in s.amplitudes_mut().iter_mut().zip(grid.momentum()) {
            *a *= p.powi(m as i32);
        }
    }
    s.rebalance();
    Ok(s)
}

/// Result of one forward/θ/backward echo.
#[derive(Debug, Clone)]
pub struct Echo {
    /// `C₁` or `C₂`, depending on the protocol.
    pub value: f64,
    /// State at `t_0` after the backward run (`ψ_R` or `φ_R`).
    pub echoed: WaveState,
    /// `θ`-multiplied state at the pivot (`ψ̃(t_n)` or `φ̃(t_n)`).
    pub perturbed: WaveState,
    /// `⟨ψ̃|ψ̃⟩`, the norm held during the backward run.
    pub perturbed_norm: f64,
    /// Norm-divided `⟨θ²⟩` of the forward state at the pivot.
    pub theta_sq_at_pivot: f64,
    pub forward: TrajectoryRecord,
    pub backward: TrajectoryRecord,
}

/// Diagnostics attached to each point of an [`OtocSeries`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Norm held by `ψ_R` during the backward run.
    pub backward_norm_plateau: f64,
    pub theta_sq_at_pivot: f64,
    /// Tail fit of `|θψ(t_n)|²` in momentum space, if a window exists.
    pub tail: Option<PowerLawFit>,
    /// Norm-divided `⟨θ⟩` and `⟨p⟩` of the forward state at the pivot.
    pub mean_theta: f64,
    pub mean_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtocPoint {
    pub pivot: usize,
    pub m: u32,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: Complex64,
    pub diagnostics: Diagnostics,
}

impl OtocPoint {
    fn assemble(
        pivot: usize,
        m: u32,
        c1: f64,
        c2: f64,
        c3: Complex64,
        diagnostics: Diagnostics,
    ) -> Self {
        OtocPoint {
            pivot,
            m,
            c: c1 + c2 - 2.0 * c3.re,
            c1,
            c2,
            c3,
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OtocSeries {
    pub params: SimParams,
    pub m: u32,
    pub normalization: Normalization,
    pub points: Vec<OtocPoint>,
}

impl OtocSeries {
    pub fn last(&self) -> Option<&OtocPoint> {
        self.points.last()
    }
}

/// Grid, Floquet factors and initial state shared by all echoes of one run.
#[derive(Debug, Clone)]
pub struct OtocEngine {
    params: SimParams,
    grid: Grid,
    factors: PhaseFactors,
    initial: WaveState,
    normalization: Normalization,
}

impl OtocEngine {
    pub fn new(params: SimParams, normalization: Normalization) -> Result<Self> {
        params.validate()?;
        let grid = Grid::from_params(&params)?;
        let factors = PhaseFactors::new(&grid, &params)?;
        let initial = grid.gaussian(params.sigma)?;
        Ok(OtocEngine {
            params,
            grid,
            factors,
            initial,
            normalization,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn factors(&self) -> &PhaseFactors {
        &self.factors
    }

    pub fn initial(&self) -> &WaveState {
        &self.initial
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Forward to `pivot`, multiply by `θ`, backward to `t_0`.
    pub fn echo(&self, start: &WaveState, pivot: usize) -> Result<Echo> {
        self.echo_with_snapshots(start, pivot, &[])
    }

    pub fn echo_with_snapshots(
        &self,
        start: &WaveState,
        pivot: usize,
        snapshot_times: &[usize],
    ) -> Result<Echo> {
        let start_norm = start.norm_squared();
        let forward_policy = self.policy(start_norm);
        let (at_pivot, forward) = self.factors.evolve_with_snapshots(
            start,
            pivot,
            Direction::Forward,
            forward_policy,
            snapshot_times,
        )?;
        let theta_sq_at_pivot =
            observables::expectation(&self.grid, &at_pivot, Observable::ThetaSquared)?;
        let perturbed = apply_theta(&self.grid, &at_pivot)?;
        let perturbed_norm = perturbed.norm_squared();
        let backward_policy = self.policy(perturbed_norm);
        let (echoed, backward) = self.factors.evolve_with_snapshots(
            &perturbed,
            pivot,
            Direction::Backward,
            backward_policy,
            snapshot_times,
        )?;
        Ok(Echo {
            value: f64::NAN,
            echoed,
            perturbed,
            perturbed_norm,
            theta_sq_at_pivot,
            forward,
            backward,
        })
    }

    fn policy(&self, target: f64) -> NormPolicy {
        match self.normalization {
            Normalization::Pinned => NormPolicy::PinTo(target),
            Normalization::Unnormalized => NormPolicy::None,
        }
    }

    /// `C₁ = ⟨ψ_R|p^{2m}|ψ_R⟩`, not divided by `⟨ψ_R|ψ_R⟩`.
    pub fn compute_c1(&self, m: u32, pivot: usize) -> Result<Echo> {
        let mut echo = self.echo(&self.initial, pivot)?;
        let half = apply_p_power(&self.grid, &echo.echoed, m)?;
        echo.value = half.norm_squared();
        Ok(echo)
    }

    /// `C₂ = ⟨φ_R|φ_R⟩` with `φ(t_0) = p^m ψ(t_0)`.
    pub fn compute_c2(&self, m: u32, pivot: usize) -> Result<Echo> {
        let start = apply_p_power(&self.grid, &self.initial, m)?;
        let mut echo = self.echo(&start, pivot)?;
        echo.value = echo.echoed.norm_squared();
        Ok(echo)
    }

    /// `C₃ = ⟨ψ_R|p^m|φ_R⟩`.
    pub fn compute_c3(&self, psi_r: &WaveState, phi_r: &WaveState, m: u32) -> Result<Complex64> {
        let left = self.grid.represent(psi_r, Representation::Momentum)?;
        let right = apply_p_power(&self.grid, phi_r, m)?;
        left.inner(&right)
    }

    pub fn compute_point(&self, m: u32, pivot: usize) -> Result<OtocPoint> {
        if m == 0 {
            return Err(Error::invalid("m", "must be >= 1"));
        }
        let (c1, c2) = rayon::join(|| self.compute_c1(m, pivot), || self.compute_c2(m, pivot));
        let (c1, c2) = (c1?, c2?);
        let c3 = self.compute_c3(&c1.echoed, &c2.echoed, m)?;
        let tail = observables::snapshot(&self.grid, &c1.perturbed, Axis::Momentum, true)
            .and_then(|d| observables::fit_power_law_tail(&d))
            .ok();
        let diagnostics = Diagnostics {
            backward_norm_plateau: c1.perturbed_norm,
            theta_sq_at_pivot: c1.theta_sq_at_pivot,
            tail,
            mean_theta: *c1.forward.mean_theta.last().unwrap_or(&f64::NAN),
            mean_p: *c1.forward.mean_p.last().unwrap_or(&f64::NAN),
        };
        let point = OtocPoint::assemble(pivot, m, c1.value, c2.value, c3, diagnostics);
        if !(point.c.is_finite() && point.c3.re.is_finite()) {
            return Err(Error::NonFinite("OTOC assembly"));
        }
        Ok(point)
    }

    /// `C(t_j)` for every pivot `t_1 … t_n`, each from a fresh forward run.
    pub fn compute_series(&self, m: u32, last_pivot: usize) -> Result<OtocSeries> {
        let points = (1..=last_pivot)
            .into_par_iter()
            .map(|pivot| self.compute_point(m, pivot))
            .collect::<Result<Vec<_>>>()?;
        Ok(OtocSeries {
            params: self.params,
            m,
            normalization: self.normalization,
            points,
        })
    }
}

/// Runs the pinned protocol for pivots `t_1 … t_n` of the request.
pub fn compute_otoc_series(request: &OtocRequest) -> Result<OtocSeries> {
    request.validate()?;
    OtocEngine::new(request.params, Normalization::Pinned)?.compute_series(request.m, request.pivot)
}

/// Runs the pinned protocol at the request's pivot only.
pub fn compute_otoc(request: &OtocRequest) -> Result<OtocPoint> {
    request.validate()?;
    OtocEngine::new(request.params, Normalization::Pinned)?.compute_point(request.m, request.pivot)
}
