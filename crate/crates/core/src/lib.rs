//! Out-of-time-ordered correlators of the PT-symmetric quantum kicked rotor.
//!
//! The rotor is kicked by `V(θ) = K [cos θ + iλ sin θ]` and rotates freely
//! between kicks. For `λ` above the symmetry-breaking threshold the norm of
//! any state grows exponentially and the wavepacket locks onto `θ = π/2`
//! while drifting in momentum at `⟨p⟩ = Kt`. This crate evolves that map with
//! an FFT split-operator scheme and evaluates `C(t) = -⟨[θ(t), p^m]²⟩` through
//! forward/backward echoes with per-step renormalization.
//!
//! Modules, bottom up:
//!
//! * [`spectral`]: grids, states, transforms, norms
//! * [`floquet`]: the one-kick map, its adjoint, norm policies
//! * [`otoc`]: the echo protocols for `C₁`, `C₂`, `C₃` and `C`
//! * [`observables`]: expectations, distributions, tail fits, predictions
//! * [`oracle`]: dense-matrix reference evaluation for small `N`
//! * [`experiment`]: presets, configs, CSV/JSON output
//!
//! ```
//! use ptkr::{compute_otoc, OtocRequest, SimParams};
//!
//! let params = SimParams::default().with_dim(1024);
//! let point = compute_otoc(&OtocRequest { params, m: 1, pivot: 3 }).unwrap();
//! assert!(point.c.is_finite());
//! assert!((point.c - (point.c1 + point.c2 - 2.0 * point.c3.re)).abs() < 1e-12 * point.c1);
//! ```

pub mod error;
pub mod experiment;
pub mod floquet;
pub mod observables;
pub mod oracle;
pub mod otoc;
pub mod params;
pub mod spectral;

pub use error::{Error, Result};
pub use floquet::{Direction, NormPolicy, PhaseFactors, TrajectoryRecord};
pub use observables::{
    expectation, fit_power_law_tail, norm_growth_scan, predict, snapshot, Axis,
    DistributionSnapshot, Observable, PowerLawFit, PredictionKind, PredictionSet, THETA_C,
};
pub use oracle::{dense_oracle, OracleValues};
pub use otoc::{
    apply_p_power, apply_theta, compute_otoc, compute_otoc_series, Normalization, OtocEngine,
    OtocPoint, OtocRequest, OtocSeries,
};
pub use params::SimParams;
pub use spectral::{Grid, Representation, WaveState};
