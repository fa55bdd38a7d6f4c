//! Dense-matrix evaluation of the OTOC for small grids.
//!
//! Everything here is built from explicit `N × N` matrices in the position
//! basis: the DFT matrix from its defining exponentials, `U` as
//! `F† diag(free) F diag(kick)` with the raw (gain-included) kick, `θ` as a
//! diagonal, and `p^m` as `F† diag(p^m) F`. It shares no code path with the
//! FFT propagator and serves as its independent check.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::otoc::Normalization;
use crate::params::SimParams;

pub const ORACLE_MAX_DIM: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleValues {
    /// `-⟨ψ|[θ(t), p^m]²|ψ⟩` from the commutator matrix; only defined
    /// without renormalization.
    pub c_commutator: Option<f64>,
    /// `C₁ + C₂ - 2 Re C₃`.
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub re_c3: f64,
}

pub type Matrix = DMatrix<Complex64>;
pub type Vector = DVector<Complex64>;

/// Explicit operators on an `N`-point grid.
#[derive(Debug, Clone)]
pub struct DenseModel {
    dim: usize,
    theta: Vec<f64>,
    momentum: Vec<f64>,
    dft: Matrix,
    floquet: Matrix,
    initial: Vector,
}

impl DenseModel {
    pub fn new(params: &SimParams) -> Result<Self> {
        params.validate()?;
        let dim = params.dim;
        if dim > ORACLE_MAX_DIM {
            return Err(Error::OracleTooLarge {
                found: dim,
                limit: ORACLE_MAX_DIM,
            });
        }
        let theta: Vec<f64> = (0..dim)
            .map(|j| -PI + 2.0 * PI * j as f64 / dim as f64)
            .collect();
        let n_index: Vec<f64> = (0..dim).map(|k| k as f64 - (dim / 2) as f64).collect();
        let momentum: Vec<f64> = n_index.iter().map(|n| n * params.hbar).collect();

        let norm = (dim as f64).sqrt().recip();
        let dft = Matrix::from_fn(dim, dim, |k, j| {
            Complex64::from_polar(norm, -n_index[k] * theta[j])
        });
        let kick = Matrix::from_diagonal(&Vector::from_iterator(
            dim,
            theta.iter().map(|&t| {
                let v = Complex64::new(
                    params.kick_strength * t.cos(),
                    params.kick_strength * params.non_hermiticity * t.sin(),
                );
                (-Complex64::i() * v / params.hbar).exp()
            }),
        ));
        let free = Matrix::from_diagonal(&Vector::from_iterator(
            dim,
            momentum
                .iter()
                .map(|p| Complex64::from_polar(1.0, -p * p / (2.0 * params.hbar))),
        ));
        let floquet = dft.adjoint() * free * &dft * kick;

        let mut initial = Vector::from_iterator(
            dim,
            theta
                .iter()
                .map(|t| Complex64::new((-0.5 * params.sigma * t * t).exp(), 0.0)),
        );
        let n0 = initial.norm();
        initial /= Complex64::new(n0, 0.0);

        Ok(DenseModel {
            dim,
            theta,
            momentum,
            dft,
            floquet,
            initial,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn floquet(&self) -> &Matrix {
        &self.floquet
    }

    pub fn theta_matrix(&self) -> Matrix {
        Matrix::from_diagonal(&Vector::from_iterator(
            self.dim,
            self.theta.iter().map(|&t| Complex64::new(t, 0.0)),
        ))
    }

    /// `p^k` as a dense matrix in the position basis.
    pub fn momentum_power(&self, k: u32) -> Matrix {
        let diag = Matrix::from_diagonal(&Vector::from_iterator(
            self.dim,
            self.momentum
                .iter()
                .map(|p| Complex64::new(p.powi(k as i32), 0.0)),
        ));
        self.dft.adjoint() * diag * &self.dft
    }

    /// Heisenberg-picture `θ(t) = U†ᵗ θ Uᵗ`.
    pub fn heisenberg_theta(&self, t: usize) -> Matrix {
        let u_t = (0..t).fold(Matrix::identity(self.dim, self.dim), |acc, _| {
            &self.floquet * acc
        });
        u_t.adjoint() * self.theta_matrix() * u_t
    }

    pub fn initial(&self) -> &Vector {
        &self.initial
    }

    fn echo(&self, start: &Vector, t: usize, normalization: Normalization) -> Vector {
        let u_dag = self.floquet.adjoint();
        let theta = self.theta_matrix();
        let start_norm = start.norm_squared();
        let mut v = start.clone();
        for _ in 0..t {
            v = &self.floquet * v;
            if normalization == Normalization::Pinned {
                pin(&mut v, start_norm);
            }
        }
        v = theta * v;
        let perturbed_norm = v.norm_squared();
        for _ in 0..t {
            v = &u_dag * v;
            if normalization == Normalization::Pinned {
                pin(&mut v, perturbed_norm);
            }
        }
        v
    }

    pub fn evaluate(&self, m: u32, t: usize, normalization: Normalization) -> OracleValues {
        let b = self.momentum_power(m);
        let b2 = self.momentum_power(2 * m);
        let psi = &self.initial;
        let psi_r = self.echo(psi, t, normalization);
        let phi_r = self.echo(&(&b * psi), t, normalization);

        let c1 = psi_r.dotc(&(&b2 * &psi_r)).re;
        let c2 = phi_r.norm_squared();
        let re_c3 = psi_r.dotc(&(&b * &phi_r)).re;

        let c_commutator = match normalization {
            Normalization::Unnormalized => {
                let a = self.heisenberg_theta(t);
                let comm = &a * &b - &b * &a;
                let sq = &comm * &comm;
                Some(-psi.dotc(&(sq * psi)).re)
            }
            Normalization::Pinned => None,
        };
        OracleValues {
            c_commutator,
            c: c1 + c2 - 2.0 * re_c3,
            c1,
            c2,
            re_c3,
        }
    }
}

fn pin(v: &mut Vector, target: f64) {
    let factor = (target / v.norm_squared()).sqrt();
    *v *= Complex64::new(factor, 0.0);
}

/// Dense evaluation of `C`, `C₁`, `C₂`, `Re C₃` at pivot `t`.
pub fn dense_oracle(
    params: &SimParams,
    m: u32,
    t: usize,
    normalization: Normalization,
) -> Result<OracleValues> {
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    Ok(DenseModel::new(params)?.evaluate(m, t, normalization))
}
