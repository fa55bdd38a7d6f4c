//! Expectation values, distributions, power-law tail fits, closed-form
//! predictions and the norm-growth scan over `λ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{Direction, NormPolicy, PhaseFactors};
use crate::params::SimParams;
use crate::spectral::{Grid, Representation, WaveState};

/// Angle where the gain `exp(Kλ sin θ/ħ)` peaks.
pub const THETA_C: f64 = PI / 2.0;

/// Observables diagonal in position or momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Theta,
    ThetaSquared,
    Momentum,
    MomentumPower(u32),
}

/// `⟨ψ|Q|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn expectation(grid: &Grid, state: &WaveState, observable: Observable) -> Result<f64> {
    let (repr, values, power): (_, &[f64], i32) = match observable {
        Observable::Theta => (Representation::Position, grid.theta(), 1),
        Observable::ThetaSquared => (Representation::Position, grid.theta(), 2),
        Observable::Momentum => (Representation::Momentum, grid.momentum(), 1),
        Observable::MomentumPower(k) => (Representation::Momentum, grid.momentum(), k as i32),
    };
    let s = grid.represent(state, repr)?;
    let mut weighted = 0.0;
    let mut total = 0.0;
    for (a, x) in s.amplitudes().iter().zip(values) {
        let w = a.norm_sqr();
        weighted += w * x.powi(power);
        total += w;
    }
    if total == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(weighted / total)
}

/// `⟨ψ|Q|ψ⟩` including the norm (the raw, un-divided convention).
pub fn raw_expectation(grid: &Grid, state: &WaveState, observable: Observable) -> Result<f64> {
    Ok(expectation(grid, state, observable)? * state.norm_squared())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Position,
    Momentum,
}

/// `|amplitude|²` along one axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSnapshot {
    pub axis: Axis,
    /// Grid coordinates (`θ_j` or `p_n`), ascending.
    pub coordinates: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub normalized: bool,
    pub time: Option<usize>,
    pub direction: Option<Direction>,
}

impl DistributionSnapshot {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn peak_index(&self) -> usize {
        self.probabilities
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| {
                if p > best.1 {
                    (i, p)
                } else {
                    best
                }
            })
            .0
    }
}

pub fn snapshot(
    grid: &Grid,
    state: &WaveState,
    axis: Axis,
    normalize: bool,
) -> Result<DistributionSnapshot> {
    let (repr, coordinates) = match axis {
        Axis::Position => (Representation::Position, grid.theta()),
        Axis::Momentum => (Representation::Momentum, grid.momentum()),
    };
    let s = grid.represent(state, repr)?;
    let mut probabilities: Vec<f64> = s.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    if normalize {
        let total: f64 = probabilities.iter().sum();
        if total == 0.0 {
            return Err(Error::ZeroNorm);
        }
        probabilities.iter_mut().for_each(|p| *p /= total);
    } else {
        let scale = (2.0 * s.log_scale()).exp();
        probabilities.iter_mut().for_each(|p| *p *= scale);
    }
    Ok(DistributionSnapshot {
        axis,
        coordinates: coordinates.to_vec(),
        probabilities,
        normalized: normalize,
        time: None,
        direction: None,
    })
}

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root-mean-square residual.
    pub residual: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
        residual: (ss_res / nf).sqrt(),
    })
}

/// Fewest points accepted on one side of the peak.
pub const MIN_TAIL_POINTS: usize = 8;
/// Cells skipped next to the peak.
pub const TAIL_CORE_CELLS: usize = 4;
/// Window ends where the probability drops below this fraction of the peak.
pub const TAIL_FLOOR: f64 = 1e-12;
/// RMS log-residual above which a fit is not treated as a power law.
pub const POWER_LAW_MAX_RESIDUAL: f64 = 0.5;

/// Power-law fit `q(p) ∝ |p - p_c|^exponent` of a distribution's tails.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub p_c: f64,
    pub exponent: f64,
    /// Index ranges (start inclusive, end exclusive) of the fitted sides.
    pub fit_windows: Vec<(usize, usize)>,
    /// Exponent of each fitted side, in the order of `fit_windows`.
    pub side_exponents: Vec<f64>,
    /// RMS of the log-log residuals over all fitted points.
    pub residual: f64,
}

impl PowerLawFit {
    pub fn is_power_law(&self) -> bool {
        self.residual < POWER_LAW_MAX_RESIDUAL
    }
}

/// Fits the decaying tails on both sides of the peak in log-log space.
///
/// Each side starts [`TAIL_CORE_CELLS`] beyond the peak and stops at the
/// first point below [`TAIL_FLOOR`] times the peak, or at the grid edge.
/// Sides with at least [`MIN_TAIL_POINTS`] points are fitted and their
/// exponents averaged.
pub fn fit_power_law_tail(dist: &DistributionSnapshot) -> Result<PowerLawFit> {
    let q = &dist.probabilities;
    let x = &dist.coordinates;
    let n = q.len();
    let peak = dist.peak_index();
    let p_c = refine_peak(x, q, peak);
    let floor = q[peak] * TAIL_FLOOR;

    let mut windows = Vec::new();
    // right side
    let start = peak + TAIL_CORE_CELLS;
    if start < n {
        let end = (start..n)
            .find(|&i| q[i] < floor || q[i] <= 0.0)
            .unwrap_or(n);
        windows.push((start, end));
    }
    // left side
    if peak >= TAIL_CORE_CELLS {
        let last = peak - TAIL_CORE_CELLS;
        let begin = (0..=last)
            .rev()
            .find(|&i| q[i] < floor || q[i] <= 0.0)
            .map(|i| i + 1)
            .unwrap_or(0);
        windows.push((begin, last + 1));
    }

    let mut used = Vec::new();
    let mut side_exponents = Vec::new();
    let mut residual_sq = 0.0;
    let mut count = 0usize;
    let mut largest = 0;
    for (a, b) in windows {
        let len = b.saturating_sub(a);
        largest = largest.max(len);
        if len < MIN_TAIL_POINTS {
            continue;
        }
        let lx: Vec<f64> = (a..b).map(|i| (x[i] - p_c).abs().ln()).collect();
        let ly: Vec<f64> = (a..b).map(|i| q[i].ln()).collect();
        if let Some(fit) = linear_fit(&lx, &ly) {
            side_exponents.push(fit.slope);
            residual_sq += fit.residual.powi(2) * len as f64;
            count += len;
            used.push((a, b));
        }
    }
    if side_exponents.is_empty() {
        return Err(Error::FitWindowTooSmall {
            found: largest,
            required: MIN_TAIL_POINTS,
        });
    }
    let exponent = side_exponents.iter().sum::<f64>() / side_exponents.len() as f64;
    Ok(PowerLawFit {
        p_c,
        exponent,
        fit_windows: used,
        side_exponents,
        residual: (residual_sq / count as f64).sqrt(),
    })
}

// argmax refined by a parabola through the three neighbouring points
fn refine_peak(x: &[f64], q: &[f64], peak: usize) -> f64 {
    if peak == 0 || peak + 1 >= q.len() {
        return x[peak];
    }
    let (a, b, c) = (q[peak - 1], q[peak], q[peak + 1]);
    let denom = a - 2.0 * b + c;
    if denom == 0.0 {
        return x[peak];
    }
    let shift = 0.5 * (a - c) / denom;
    x[peak] + shift.clamp(-0.5, 0.5) * (x[peak + 1] - x[peak])
}

/// `(2m-1)!!` with `(-1)!! = 1`.
pub fn double_factorial_odd(m: u32) -> f64 {
    (1..=m).map(|k| (2 * k - 1) as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictionKind {
    Otoc,
    C1,
    C2,
    C3,
}

/// Closed-form large-`N`, late-time values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionSet {
    pub dim: usize,
    pub m: u32,
    pub theta_c: f64,
    /// `α = 1/(σħ²)`.
    pub alpha: f64,
    /// `C ∼ N^{2m-1} θ_c²`.
    pub c_total: f64,
    /// `C₁ ∝ N^{2m-1} θ_c²`, same scale as `c_total`.
    pub c1: f64,
    /// `C₂ ∼ θ_c² (2m-1)!! / (2^m α^m)`.
    pub c2: f64,
    /// `0` for odd `m`, `η N^{m-1}` for even `m`; `None` when even `m` lacks `η`.
    pub c3: Option<f64>,
}

impl PredictionSet {
    pub fn new(dim: usize, m: u32, sigma: f64, hbar: f64, eta: Option<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "must be >= 1"));
        }
        if !(sigma > 0.0 && hbar > 0.0) {
            return Err(Error::invalid("sigma/hbar", "must be > 0"));
        }
        let theta_c2 = THETA_C * THETA_C;
        let alpha = 1.0 / (sigma * hbar * hbar);
        let scale = (dim as f64).powi(2 * m as i32 - 1) * theta_c2;
        let c2 = theta_c2 * gaussian_momentum_moment(m, alpha);
        let c3 = if m % 2 == 1 {
            Some(0.0)
        } else {
            eta.map(|e| e * (dim as f64).powi(m as i32 - 1))
        };
        Ok(PredictionSet {
            dim,
            m,
            theta_c: THETA_C,
            alpha,
            c_total: scale,
            c1: scale,
            c2,
            c3,
        })
    }

    pub fn from_params(params: &SimParams, m: u32, eta: Option<f64>) -> Result<Self> {
        PredictionSet::new(params.dim, m, params.sigma, params.hbar, eta)
    }

    pub fn get(&self, kind: PredictionKind) -> Result<f64> {
        match kind {
            PredictionKind::Otoc => Ok(self.c_total),
            PredictionKind::C1 => Ok(self.c1),
            PredictionKind::C2 => Ok(self.c2),
            PredictionKind::C3 => self.c3.ok_or(Error::MissingPrefactor),
        }
    }
}

/// `∫ p^{2m} |ψ(p)|² dp = (2m-1)!! / (2^m α^m)` for the initial Gaussian.
pub fn gaussian_momentum_moment(m: u32, alpha: f64) -> f64 {
    double_factorial_odd(m) / (2.0 * alpha).powi(m as i32)
}

pub fn predict(
    kind: PredictionKind,
    dim: usize,
    m: u32,
    sigma: f64,
    hbar: f64,
    eta: Option<f64>,
) -> Result<f64> {
    PredictionSet::new(dim, m, sigma, hbar, eta)?.get(kind)
}

/// Window used to turn a log-norm trace into a growth rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthWindow {
    pub n_kicks: usize,
    /// Initial steps ignored.
    pub transient: usize,
}

impl Default for GrowthWindow {
    fn default() -> Self {
        GrowthWindow {
            n_kicks: 20,
            transient: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub lambda: f64,
    /// Late-time slope of `ln⟨ψ|ψ⟩` per kick.
    pub rate: f64,
}

/// Late-time slope of `ln⟨ψ|ψ⟩` for each `λ`, evolving the initial Gaussian
/// without renormalization. Uses the last half of the window after the
/// transient.
pub fn norm_growth_scan(
    template: &SimParams,
    lambdas: &[f64],
    window: GrowthWindow,
) -> Result<Vec<GrowthPoint>> {
    let grid = Grid::from_params(template)?;
    let initial = grid.gaussian(template.sigma)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let params = template.with_non_hermiticity(lambda);
            let factors = PhaseFactors::new(&grid, &params)?;
            let (_, record) = factors.evolve(
                &initial,
                window.n_kicks,
                Direction::Forward,
                NormPolicy::None,
            )?;
            let first = window.transient.max(window.n_kicks / 2);
            let t: Vec<f64> = (first..=window.n_kicks).map(|i| i as f64).collect();
            let y: Vec<f64> = (first..=window.n_kicks)
                .map(|i| record.log_norm_before[i])
                .collect();
            let rate = linear_fit(&t, &y).map(|f| f.slope).unwrap_or(0.0);
            Ok(GrowthPoint { lambda, rate })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn initial_gaussian_moments() {
        let g = Grid::new(1024, 0.1).unwrap();
        let s = g.gaussian(10.0).unwrap();
        assert!(expectation(&g, &s, Observable::Theta).unwrap().abs() < 1e-12);
        assert!(expectation(&g, &s, Observable::Momentum).unwrap().abs() < 1e-12);
        // quadrature of θ² (σ/π)^{1/2} e^{-σθ²} over [-π, π)
        let dt = 2.0 * PI / 20000.0;
        let quad: f64 = (0..20000)
            .map(|j| {
                let t = -PI + (j as f64 + 0.5) * dt;
                t * t * (10.0 / PI).sqrt() * (-10.0 * t * t).exp() * dt
            })
            .sum();
        let th2 = expectation(&g, &s, Observable::ThetaSquared).unwrap();
        assert!((quad - 0.05).abs() < 1e-6);
        assert!((th2 - 0.05).abs() < 1e-4, "{th2}");
    }

    #[test]
    fn expectation_ignores_global_scale() {
        let g = Grid::new(128, 0.1).unwrap();
        let s = g.gaussian(10.0).unwrap();
        let f = crate::floquet::PhaseFactors::new(&g, &SimParams::default().with_dim(128)).unwrap();
        let s = f.step_forward(&s, NormPolicy::PinTo(1.0)).unwrap();
        let scaled = WaveState::new(
            s.amplitudes().iter().map(|a| a * 7.0).collect(),
            s.representation(),
        );
        for obs in [
            Observable::Theta,
            Observable::ThetaSquared,
            Observable::Momentum,
            Observable::MomentumPower(3),
        ] {
            let a = expectation(&g, &s, obs).unwrap();
            let b = expectation(&g, &scaled, obs).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        let raw = raw_expectation(&g, &scaled, Observable::ThetaSquared).unwrap();
        let norm = expectation(&g, &scaled, Observable::ThetaSquared).unwrap();
        assert!((raw / norm - 49.0).abs() < 1e-10);
    }

    #[test]
    fn snapshot_shapes() {
        let g = Grid::new(64, 0.1).unwrap();
        let delta = WaveState::basis(64, 10, Representation::Momentum);
        let snap = snapshot(&g, &delta, Axis::Momentum, true).unwrap();
        assert_eq!(snap.peak_index(), 10);
        assert!(snap
            .probabilities
            .iter()
            .enumerate()
            .all(|(i, p)| if i == 10 { *p == 1.0 } else { *p == 0.0 }));

        let s = g.gaussian(10.0).unwrap();
        let snap = snapshot(&g, &s, Axis::Position, true).unwrap();
        assert!((snap.total() - 1.0).abs() < 1e-12);
        assert_eq!(snap.peak_index(), 32);
        for j in 1..64 {
            let d = snap.probabilities[j] - snap.probabilities[g.mirror_index(j)];
            assert!(d.abs() < 1e-14);
        }
        for j in 1..32 {
            assert!(snap.probabilities[j] >= snap.probabilities[j - 1]);
        }
    }

    fn synthetic(dim: usize, hbar: f64, p_c: f64, f: impl Fn(f64) -> f64) -> DistributionSnapshot {
        let g = Grid::new(dim, hbar).unwrap();
        let coordinates = g.momentum().to_vec();
        let probabilities = coordinates
            .iter()
            .map(|p| {
                let d = (p - p_c).abs();
                if d < 1e-9 {
                    1.0
                } else {
                    f(d)
                }
            })
            .collect();
        DistributionSnapshot {
            axis: Axis::Momentum,
            coordinates,
            probabilities,
            normalized: false,
            time: None,
            direction: None,
        }
    }

    #[test]
    fn fit_recovers_inverse_square() {
        let dist = synthetic(4096, 0.1, 12.3, |d| 1e-3 / (d * d));
        let fit = fit_power_law_tail(&dist).unwrap();
        assert!((fit.exponent + 2.0).abs() < 0.02, "{}", fit.exponent);
        assert!((fit.p_c - 12.3).abs() < 0.1);
        assert_eq!(fit.fit_windows.len(), 2);
        assert!(fit.is_power_law());
    }

    #[test]
    fn fit_recovers_its_generator_within_one_percent() {
        for exponent in [-1.5, -2.0, -3.0] {
            let dist = synthetic(2048, 0.1, 0.0, |d| d.powf(exponent));
            let fit = fit_power_law_tail(&dist).unwrap();
            assert!((fit.exponent / exponent - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn exponential_decay_is_flagged() {
        let dist = synthetic(4096, 0.1, 0.0, |d| (-d / 5.0).exp());
        let fit = fit_power_law_tail(&dist).unwrap();
        assert!(!fit.is_power_law(), "residual {}", fit.residual);
    }

    #[test]
    fn tiny_window_is_an_error() {
        let dist = synthetic(16, 1.0, 0.0, |d| 1.0 / (d * d));
        assert!(matches!(
            fit_power_law_tail(&dist),
            Err(Error::FitWindowTooSmall { .. })
        ));
    }

    #[test]
    fn double_factorials() {
        assert_eq!(double_factorial_odd(0), 1.0);
        assert_eq!(double_factorial_odd(1), 1.0);
        assert_eq!(double_factorial_odd(2), 3.0);
        assert_eq!(double_factorial_odd(3), 15.0);
        assert_eq!(double_factorial_odd(4), 105.0);
    }

    #[test]
    fn gaussian_moments_match_discrete_sums() {
        let g = Grid::new(2048, 0.1).unwrap();
        let s = g.to_momentum(&g.gaussian(10.0).unwrap()).unwrap();
        let alpha = 10.0;
        for (m, want) in [(1u32, 0.05), (2, 0.0075), (3, 0.001875)] {
            let sum: f64 = s
                .amplitudes()
                .iter()
                .zip(g.momentum())
                .map(|(a, p)| a.norm_sqr() * p.powi(2 * m as i32))
                .sum();
            assert!((gaussian_momentum_moment(m, alpha) - want).abs() < 1e-15);
            assert!((sum - want).abs() < 1e-9 * want.max(1.0), "{m} {sum}");
        }
    }

    #[test]
    fn predictions() {
        let c = predict(PredictionKind::Otoc, 8192, 1, 10.0, 0.1, None).unwrap();
        assert!((c - 8192.0 * THETA_C * THETA_C).abs() < 1e-9);
        assert!((c / 2.021e4 - 1.0).abs() < 1e-3);
        let c2 = predict(PredictionKind::C2, 8192, 2, 10.0, 0.1, None).unwrap();
        assert!((c2 - 0.01851).abs() < 1e-5);
        let c2_1 = predict(PredictionKind::C2, 8192, 1, 10.0, 0.1, None).unwrap();
        assert!((c2_1 - 0.1234).abs() < 1e-4);
        let c2_3 = predict(PredictionKind::C2, 8192, 3, 10.0, 0.1, None).unwrap();
        assert!((c2_3 - 0.004626).abs() < 1e-6);
        assert_eq!(
            predict(PredictionKind::C3, 1024, 1, 10.0, 0.1, None).unwrap(),
            0.0
        );
        assert_eq!(
            predict(PredictionKind::C3, 99, 3, 10.0, 0.1, None).unwrap(),
            0.0
        );
        assert!(matches!(
            predict(PredictionKind::C3, 1024, 2, 10.0, 0.1, None),
            Err(Error::MissingPrefactor)
        ));
        let c3 = predict(PredictionKind::C3, 8192, 2, 10.0, 0.1, Some(6.05e-7)).unwrap();
        assert!((c3 - 4.956e-3).abs() < 1e-5);
        assert!(PredictionSet::new(8, 0, 10.0, 0.1, None).is_err());
    }

    #[test]
    fn c1_to_c_ratio_is_dimension_independent() {
        for m in 1..=3 {
            let r: Vec<f64> = [256usize, 1024, 8192]
                .iter()
                .map(|&n| {
                    let p = PredictionSet::new(n, m, 10.0, 0.1, None).unwrap();
                    p.c1 / p.c_total
                })
                .collect();
            assert!(r.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn linear_fit_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-14);
        assert!((f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn growth_scan() {
        let template = SimParams::default().with_dim(1024);
        let lambdas = [0.0, 0.2, 0.5, 0.9];
        let scan = norm_growth_scan(&template, &lambdas, GrowthWindow::default()).unwrap();
        assert!(scan[0].rate.abs() < 1e-10, "{}", scan[0].rate);
        assert!(scan[3].rate > 0.0);
        for w in scan.windows(2) {
            assert!(w[1].rate >= w[0].rate, "{scan:?}");
        }
    }

    #[test]
    fn unnormalized_snapshot_includes_log_scale() {
        let g = Grid::new(8, 0.1).unwrap();
        let s = WaveState::from_parts(
            vec![Complex64::new(1.0, 0.0); 8],
            Representation::Position,
            1.0,
        );
        let snap = snapshot(&g, &s, Axis::Position, false).unwrap();
        assert!((snap.probabilities[0] - (2.0f64).exp()).abs() < 1e-12);
    }
}
