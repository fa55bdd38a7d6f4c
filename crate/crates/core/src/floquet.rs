//! One-period propagation `U = exp(-i p²/2ħ) · exp(-i V(θ)/ħ)` and its adjoint.
//!
//! The kick is diagonal in position, the free rotation diagonal in momentum.
//! A forward step kicks first and then rotates; a backward step applies the
//! operator adjoint, rotating back first and kicking with the complex
//! conjugate of the forward kick.
//!
//! Kick arrays are stored with the uniform gain `e^{Kλ/ħ}` divided out, so
//! their largest modulus is 1. The gain is added to the state's `log_scale`
//! on every kick instead.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::{self, Axis, DistributionSnapshot, Observable};
use crate::params::SimParams;
use crate::spectral::{Grid, Representation, WaveState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

/// What to do with the norm after each full Floquet step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormPolicy {
    /// Keep raw amplitudes; magnitude is tracked through `log_scale`.
    None,
    /// Rescale so that `⟨ψ|ψ⟩` equals the given value.
    PinTo(f64),
}

impl NormPolicy {
    fn apply(self, state: &mut WaveState) -> Result<()> {
        match self {
            NormPolicy::None => Ok(()),
            NormPolicy::PinTo(target) => state.set_norm(target),
        }
    }
}

/// Diagonal factors of the forward and adjoint Floquet maps on one grid.
#[derive(Debug, Clone)]
pub struct PhaseFactors {
    grid: Grid,
    potential: Vec<Complex64>,
    kick_forward: Vec<Complex64>,
    kick_backward: Vec<Complex64>,
    free_forward: Vec<Complex64>,
    free_backward: Vec<Complex64>,
    kick_log_gain: f64,
}

impl PhaseFactors {
    pub fn new(grid: &Grid, params: &SimParams) -> Result<Self> {
        params.validate()?;
        if grid.dim() != params.dim {
            return Err(Error::DimensionMismatch {
                left: grid.dim(),
                right: params.dim,
            });
        }
        let k = params.kick_strength;
        let lambda = params.non_hermiticity;
        let hbar = params.hbar;
        let kick_log_gain = params.kick_log_gain();

        let potential: Vec<Complex64> = grid
            .theta()
            .iter()
            .map(|t| Complex64::new(k * t.cos(), k * lambda * t.sin()))
            .collect();
        // exp(-iV/ħ) e^{-Kλ/ħ} = exp(-iK cos θ/ħ) · exp(Kλ (sin θ - 1)/ħ)
        let kick_forward: Vec<Complex64> = grid
            .theta()
            .iter()
            .map(|t| {
                let magnitude = (k * lambda * (t.sin() - 1.0) / hbar).exp();
                Complex64::from_polar(magnitude, -k * t.cos() / hbar)
            })
            .collect();
        let kick_backward = kick_forward.iter().map(|a| a.conj()).collect();
        let free_forward: Vec<Complex64> = grid
            .momentum()
            .iter()
            .map(|p| Complex64::from_polar(1.0, -p * p / (2.0 * hbar)))
            .collect();
        let free_backward = free_forward.iter().map(|a| a.conj()).collect();

        Ok(PhaseFactors {
            grid: grid.clone(),
            potential,
            kick_forward,
            kick_backward,
            free_forward,
            free_backward,
            kick_log_gain,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `V(θ_j)` on the grid.
    pub fn potential(&self) -> &[Complex64] {
        &self.potential
    }

    pub fn kick_forward(&self) -> &[Complex64] {
        &self.kick_forward
    }

    pub fn kick_backward(&self) -> &[Complex64] {
        &self.kick_backward
    }

    pub fn free_forward(&self) -> &[Complex64] {
        &self.free_forward
    }

    pub fn free_backward(&self) -> &[Complex64] {
        &self.free_backward
    }

    pub fn kick_log_gain(&self) -> f64 {
        self.kick_log_gain
    }

    /// Largest PT-symmetry defect on mirrored grid pairs.
    ///
    /// Checks `V(θ) = V*(-θ)` and its Floquet form: the raw kick `a(θ)`
    /// satisfies `a(θ) · conj(a(-θ)) = 1`.
    pub fn pt_symmetry_defect(&self) -> f64 {
        let gain = (2.0 * self.kick_log_gain).exp();
        let mut worst = 0.0_f64;
        for j in 0..self.grid.dim() {
            let m = self.grid.mirror_index(j);
            let v = (self.potential[j] - self.potential[m].conj()).norm();
            let a = (self.kick_forward[j] * self.kick_forward[m].conj() * gain - 1.0).norm();
            worst = worst.max(v).max(a);
        }
        worst
    }

    /// One forward period with the given norm policy.
    pub fn step_forward(&self, state: &WaveState, policy: NormPolicy) -> Result<WaveState> {
        let (mut out, _) = self.raw_step(state, Direction::Forward)?;
        policy.apply(&mut out)?;
        Ok(out)
    }

    /// One period of the adjoint map `U†` with the given norm policy.
    pub fn step_backward(&self, state: &WaveState, policy: NormPolicy) -> Result<WaveState> {
        let (mut out, _) = self.raw_step(state, Direction::Backward)?;
        policy.apply(&mut out)?;
        Ok(out)
    }

    pub fn step(
        &self,
        state: &WaveState,
        direction: Direction,
        policy: NormPolicy,
    ) -> Result<WaveState> {
        match direction {
            Direction::Forward => self.step_forward(state, policy),
            Direction::Backward => self.step_backward(state, policy),
        }
    }

    /// Unnormalized step; returns the state in position representation and
    /// its log-norm.
    fn raw_step(&self, state: &WaveState, direction: Direction) -> Result<(WaveState, f64)> {
        self.grid.check_dim(state)?;
        let mut s = self.grid.represent(state, Representation::Position)?;
        match direction {
            Direction::Forward => {
                self.kick(&mut s, &self.kick_forward);
                self.free(&mut s, &self.free_forward);
            }
            Direction::Backward => {
                self.free(&mut s, &self.free_backward);
                self.kick(&mut s, &self.kick_backward);
            }
        }
        s.rebalance();
        if !s.is_finite() {
            return Err(Error::NonFinite("Floquet step"));
        }
        let log_norm = s.log_norm_squared();
        Ok((s, log_norm))
    }

    fn kick(&self, s: &mut WaveState, factors: &[Complex64]) {
        for (a, f) in s.amplitudes_mut().iter_mut().zip(factors) {
            *a *= f;
        }
        s.add_log_scale(self.kick_log_gain);
    }

    // position -> momentum, multiply, back to position
    fn free(&self, s: &mut WaveState, factors: &[Complex64]) {
        let buf = s.amplitudes_mut();
        self.grid.forward_in_place(buf);
        for (a, f) in buf.iter_mut().zip(factors) {
            *a *= f;
        }
        self.grid.inverse_in_place(buf);
        s.set_representation(Representation::Position);
    }

    /// Iterates `n_steps` periods, recording observables at every time label.
    pub fn evolve(
        &self,
        state: &WaveState,
        n_steps: usize,
        direction: Direction,
        policy: NormPolicy,
    ) -> Result<(WaveState, TrajectoryRecord)> {
        self.evolve_with_snapshots(state, n_steps, direction, policy, &[])
    }

    /// Like [`evolve`](Self::evolve), additionally storing normalized position
    /// and momentum distributions at the listed time labels.
    ///
    /// Forward runs are labelled `t_0 … t_n`; backward runs start at
    /// `t_n` and end at `t_0`.
    pub fn evolve_with_snapshots(
        &self,
        state: &WaveState,
        n_steps: usize,
        direction: Direction,
        policy: NormPolicy,
        snapshot_times: &[usize],
    ) -> Result<(WaveState, TrajectoryRecord)> {
        let label = |step: usize| match direction {
            Direction::Forward => step,
            Direction::Backward => n_steps - step,
        };
        let mut record = TrajectoryRecord::new(direction, n_steps + 1);
        let mut current = state.clone();
        record.push(
            &self.grid,
            &current,
            label(0),
            current.log_norm_squared(),
            snapshot_times,
        )?;
        for step in 1..=n_steps {
            let (mut next, log_norm) = self.raw_step(&current, direction)?;
            policy.apply(&mut next)?;
            record.push(&self.grid, &next, label(step), log_norm, snapshot_times)?;
            current = next;
        }
        Ok((current, record))
    }
}

/// Per-time-label observables of one evolution segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub direction: Direction,
    pub times: Vec<usize>,
    /// `ln⟨ψ|ψ⟩` before the norm policy was applied.
    pub log_norm_before: Vec<f64>,
    /// `ln⟨ψ|ψ⟩` after the norm policy was applied.
    pub log_norm_after: Vec<f64>,
    pub mean_theta: Vec<f64>,
    pub mean_p: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Vec<DistributionSnapshot>,
}

impl TrajectoryRecord {
    fn new(direction: Direction, capacity: usize) -> Self {
        TrajectoryRecord {
            direction,
            times: Vec::with_capacity(capacity),
            log_norm_before: Vec::with_capacity(capacity),
            log_norm_after: Vec::with_capacity(capacity),
            mean_theta: Vec::with_capacity(capacity),
            mean_p: Vec::with_capacity(capacity),
            snapshots: Vec::new(),
        }
    }

    fn push(
        &mut self,
        grid: &Grid,
        state: &WaveState,
        time: usize,
        log_norm: f64,
        snapshot_times: &[usize],
    ) -> Result<()> {
        let momentum = grid.represent(state, Representation::Momentum)?;
        let position = grid.represent(state, Representation::Position)?;
        self.times.push(time);
        self.log_norm_before.push(log_norm);
        self.log_norm_after.push(state.log_norm_squared());
        self.mean_theta.push(observables::expectation(
            grid,
            &position,
            Observable::Theta,
        )?);
        self.mean_p.push(observables::expectation(
            grid,
            &momentum,
            Observable::Momentum,
        )?);
        if snapshot_times.contains(&time) {
            for (axis, s) in [(Axis::Position, &position), (Axis::Momentum, &momentum)] {
                let mut snap = observables::snapshot(grid, s, axis, true)?;
                snap.time = Some(time);
                snap.direction = Some(self.direction);
                self.snapshots.push(snap);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Per-step increments of `ln⟨ψ|ψ⟩` produced by the dynamics alone.
    pub fn log_norm_increments(&self) -> Vec<f64> {
        (1..self.len())
            .map(|i| self.log_norm_before[i] - self.log_norm_after[i - 1])
            .collect()
    }
}
