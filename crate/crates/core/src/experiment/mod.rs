//! Reproducible experiment runs: configs, presets, CSV series and manifests.
//!
//! Every run writes `series.csv`, optional `snapshots/*.csv` and, last,
//! `manifest.json`. Column orders are fixed per kind:
//!
//! * `otoc_series`, `scaling_sweep`, `c3_scaling`: [`OTOC_COLUMNS`]
//! * `trajectory`: [`TRAJECTORY_COLUMNS`]
//! * `distributions`: [`DISTRIBUTION_COLUMNS`]
//! * `lambda_scan`: [`LAMBDA_COLUMNS`]
//! * `oracle_check`: [`ORACLE_COLUMNS`]
//!
//! Snapshots have two columns, the axis value and the probability.

mod config;
mod output;
pub mod presets;

use std::collections::BTreeMap;
use std::fs;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{ExperimentKind, RunConfig};
pub use output::{format_float, Cell, Check, FileEntry, Table};
pub use presets::{preset, PRESETS};

use crate::error::{Error, Result};
use crate::floquet::{Direction, TrajectoryRecord};
use crate::observables::{
    self, linear_fit, Axis, DistributionSnapshot, GrowthWindow, PredictionSet, THETA_C,
};
use crate::oracle::dense_oracle;
use crate::otoc::{Normalization, OtocEngine, OtocPoint};
use crate::params::SimParams;

pub const OTOC_COLUMNS: [&str; 16] = [
    "t",
    "m",
    "N",
    "C",
    "C1",
    "C2",
    "ReC3",
    "ImC3",
    "norm",
    "theta_sq",
    "mean_theta",
    "mean_p",
    "tail_exponent",
    "C_theory",
    "C2_theory",
    "C3_theory",
];
pub const TRAJECTORY_COLUMNS: [&str; 7] = [
    "direction",
    "t",
    "log_norm_before",
    "norm",
    "mean_theta",
    "mean_p",
    "p_theory",
];
pub const DISTRIBUTION_COLUMNS: [&str; 9] = [
    "state",
    "direction",
    "t",
    "axis",
    "peak",
    "p_c",
    "tail_exponent",
    "tail_residual",
    "file",
];
pub const LAMBDA_COLUMNS: [&str; 2] = ["lambda", "growth_rate"];
pub const ORACLE_COLUMNS: [&str; 8] = [
    "t",
    "m",
    "N",
    "normalization",
    "quantity",
    "pipeline",
    "oracle",
    "rel_error",
];

/// `η` in `Re C₃ ≈ η N` for `m = 2` at the reference point.
pub const REFERENCE_ETA_M2: f64 = 6.05e-7;

/// Tolerances of the built-in checks.
pub mod tolerances {
    /// `C(t_n)` may differ from `N^{2m-1} θ_c²` by this factor either way.
    pub const OTOC_FACTOR: f64 = 2.0;
    pub const SLOPE_ABS: f64 = 0.2;
    pub const DRIFT_REL: f64 = 0.05;
    pub const RETRACE_REL: f64 = 0.10;
    /// Retrace bound at `t_0`, where `K·j` vanishes, in units of `K`.
    pub const RETRACE_ABS_AT_ORIGIN: f64 = 0.10;
    pub const THETA_REL: f64 = 0.05;
    pub const PLATEAU_REL: f64 = 0.10;
    pub const TAIL_RANGE: (f64, f64) = (-2.3, -1.7);
    pub const C2_REL: f64 = 0.25;
    pub const C3_ODD_RATIO: f64 = 1e-2;
    pub const C3_EVEN_R2: f64 = 0.9;
    pub const ORACLE_REL: f64 = 1e-10;
    pub const IDENTITY_REL: f64 = 1e-12;
    pub const UNITARY_RATE: f64 = 1e-10;
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub preset: Option<String>,
    pub config: RunConfig,
    pub config_hash: String,
    pub workers: usize,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
    pub checks: Vec<Check>,
    pub all_checks_passed: bool,
    /// Set when a result was non-finite or a computation failed.
    pub failed: bool,
    pub error: Option<String>,
    pub notes: BTreeMap<String, String>,
}

impl RunManifest {
    /// Whether a `--check` run should exit successfully.
    pub fn succeeded(&self, check: bool) -> bool {
        !self.failed && (!check || self.all_checks_passed)
    }
}

struct Outcome {
    series: Table,
    snapshots: Vec<(String, Table)>,
    checks: Vec<Check>,
    notes: BTreeMap<String, String>,
}

impl Outcome {
    fn new(series: Table) -> Self {
        Outcome {
            series,
            snapshots: Vec::new(),
            checks: Vec::new(),
            notes: BTreeMap::new(),
        }
    }
}

/// Executes `config`, writing all outputs under `config.out_dir`.
///
/// Invalid configurations and I/O failures are errors. Failed or non-finite
/// computations still produce a manifest, with `failed` set.
pub fn run(config: &RunConfig) -> Result<RunManifest> {
    config.validate()?;
    let started_at = now();
    let root = &config.out_dir;
    fs::create_dir_all(root)?;
    output::clear_previous(root)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", config.workers)))?;
    let outcome = pool.install(|| execute(config));

    let mut manifest = RunManifest {
        artifact: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: config.kind,
        preset: config.preset.clone(),
        config: config.clone(),
        config_hash: config.hash(),
        workers: config.workers,
        started_at,
        finished_at: String::new(),
        files: Vec::new(),
        checks: Vec::new(),
        all_checks_passed: false,
        failed: false,
        error: None,
        notes: BTreeMap::new(),
    };
    manifest
        .notes
        .insert("tail_fit_window".into(), tail_window_note());

    match outcome {
        Ok(outcome) => {
            manifest
                .files
                .push(output::write_table(root, "series.csv", &outcome.series)?);
            for (name, table) in &outcome.snapshots {
                manifest.files.push(output::write_table(
                    root,
                    &format!("snapshots/{name}"),
                    table,
                )?);
            }
            manifest.failed = outcome.series.has_non_finite();
            if manifest.failed {
                manifest.error = Some("non-finite values in series.csv".into());
            }
            manifest.all_checks_passed = outcome.checks.iter().all(|c| c.passed);
            manifest.checks = outcome.checks;
            manifest.notes.extend(outcome.notes);
        }
        Err(e) => {
            manifest.failed = true;
            manifest.error = Some(e.to_string());
        }
    }
    manifest.finished_at = now();
    output::write_json_atomic(&root.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn tail_window_note() -> String {
    format!(
        "per side: from {} cells beyond the refined peak to the first point below {:e} of the peak (or the grid edge); at least {} points per side; exponent is the mean of the side slopes",
        observables::TAIL_CORE_CELLS,
        observables::TAIL_FLOOR,
        observables::MIN_TAIL_POINTS
    )
}

fn execute(config: &RunConfig) -> Result<Outcome> {
    match config.kind {
        ExperimentKind::OtocSeries | ExperimentKind::ScalingSweep | ExperimentKind::C3Scaling => {
            run_otoc(config)
        }
        ExperimentKind::Trajectory => run_trajectory(config),
        ExperimentKind::Distributions => run_distributions(config),
        ExperimentKind::LambdaScan => run_lambda_scan(config),
        ExperimentKind::OracleCheck => run_oracle(config),
    }
}

fn eta_for(m: u32) -> Option<f64> {
    (m == 2).then_some(REFERENCE_ETA_M2)
}

fn run_otoc(config: &RunConfig) -> Result<Outcome> {
    let pivots = config.pivots();
    let engines = config
        .dims
        .iter()
        .map(|&d| OtocEngine::new(config.params.with_dim(d), Normalization::Pinned))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u32, usize)> = (0..engines.len())
        .flat_map(|e| {
            let pivots = &pivots;
            config
                .m_values
                .iter()
                .flat_map(move |&m| pivots.iter().map(move |&t| (e, m, t)))
        })
        .collect();
    let points = jobs
        .par_iter()
        .map(|&(e, m, t)| engines[e].compute_point(m, t))
        .collect::<Result<Vec<_>>>()?;

    let mut series = Table::new(&OTOC_COLUMNS);
    for (&(e, m, _), p) in jobs.iter().zip(&points) {
        let params = engines[e].params();
        let pred = PredictionSet::from_params(params, m, eta_for(m))?;
        series.push(otoc_row(params, p, &pred));
    }
    let mut outcome = Outcome::new(series);
    let last = *pivots.iter().max().expect("non-empty pivots");
    let at_last = |m: u32| -> Vec<(&SimParams, &OtocPoint)> {
        jobs.iter()
            .zip(&points)
            .filter(|((_, pm, t), _)| *pm == m && *t == last)
            .map(|(&(e, _, _), p)| (engines[e].params(), p))
            .collect()
    };

    for &m in &config.m_values {
        let rows = at_last(m);
        match config.kind {
            ExperimentKind::OtocSeries | ExperimentKind::ScalingSweep => {
                for &(params, p) in &rows {
                    let pred = PredictionSet::from_params(params, m, None)?;
                    let ratio = p.c / pred.c_total;
                    let f = tolerances::OTOC_FACTOR;
                    outcome.checks.push(Check::new(
                        format!("otoc_prefactor_m{m}_N{}", params.dim),
                        p.c,
                        pred.c_total,
                        format!("factor {f}"),
                        ratio >= 1.0 / f && ratio <= f,
                    ));
                    if config.kind == ExperimentKind::OtocSeries {
                        let rel = (p.c2 / pred.c2 - 1.0).abs();
                        outcome.checks.push(Check::new(
                            format!("c2_plateau_m{m}_N{}", params.dim),
                            p.c2,
                            pred.c2,
                            format!("relative {}", tolerances::C2_REL),
                            rel <= tolerances::C2_REL,
                        ));
                    }
                }
                if config.kind == ExperimentKind::ScalingSweep && rows.len() >= 2 {
                    let x: Vec<f64> = rows.iter().map(|(q, _)| (q.dim as f64).ln()).collect();
                    let y: Vec<f64> = rows.iter().map(|(_, p)| p.c.ln()).collect();
                    let slope = linear_fit(&x, &y).map_or(f64::NAN, |f| f.slope);
                    let target = (2 * m - 1) as f64;
                    outcome
                        .notes
                        .insert(format!("slope_m{m}"), format_float(slope));
                    outcome.checks.push(Check::new(
                        format!("scaling_slope_m{m}"),
                        slope,
                        target,
                        format!("absolute {}", tolerances::SLOPE_ABS),
                        (slope - target).abs() <= tolerances::SLOPE_ABS,
                    ));
                }
            }
            ExperimentKind::C3Scaling => {
                if m % 2 == 1 {
                    let worst = rows
                        .iter()
                        .map(|(_, p)| (p.c3.re / p.c1).abs())
                        .fold(0.0, f64::max);
                    outcome.checks.push(Check::new(
                        format!("c3_odd_ratio_m{m}"),
                        worst,
                        0.0,
                        format!("below {}", tolerances::C3_ODD_RATIO),
                        worst < tolerances::C3_ODD_RATIO,
                    ));
                } else if rows.len() >= 2 {
                    let x: Vec<f64> = rows.iter().map(|(q, _)| q.dim as f64).collect();
                    let y: Vec<f64> = rows.iter().map(|(_, p)| p.c3.re).collect();
                    let fit = linear_fit(&x, &y);
                    let (eta, r2) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r_squared));
                    outcome.notes.insert(format!("eta_m{m}"), format_float(eta));
                    outcome.checks.push(Check::new(
                        format!("c3_even_linearity_m{m}"),
                        r2,
                        1.0,
                        format!("r_squared above {}", tolerances::C3_EVEN_R2),
                        r2 > tolerances::C3_EVEN_R2,
                    ));
                    if m == 2 {
                        let order = (eta / REFERENCE_ETA_M2).log10();
                        outcome.checks.push(Check::new(
                            "c3_even_slope_m2",
                            eta,
                            REFERENCE_ETA_M2,
                            "positive, within one decade",
                            eta > 0.0 && order.abs() <= 1.0,
                        ));
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    Ok(outcome)
}

fn otoc_row(params: &SimParams, p: &OtocPoint, pred: &PredictionSet) -> Vec<Cell> {
    let d = &p.diagnostics;
    vec![
        p.pivot.into(),
        p.m.into(),
        params.dim.into(),
        p.c.into(),
        p.c1.into(),
        p.c2.into(),
        p.c3.re.into(),
        p.c3.im.into(),
        d.backward_norm_plateau.into(),
        d.theta_sq_at_pivot.into(),
        d.mean_theta.into(),
        d.mean_p.into(),
        d.tail.as_ref().map(|t| t.exponent).into(),
        pred.c_total.into(),
        pred.c2.into(),
        pred.c3.into(),
    ]
}

fn run_trajectory(config: &RunConfig) -> Result<Outcome> {
    let params = config.params;
    let n = params.n_kicks;
    let engine = OtocEngine::new(params, Normalization::Pinned)?;
    let echo = engine.echo(engine.initial(), n)?;
    let k = params.kick_strength;

    let mut series = Table::new(&TRAJECTORY_COLUMNS);
    for rec in [&echo.forward, &echo.backward] {
        for i in 0..rec.len() {
            let t = rec.times[i];
            series.push(vec![
                rec.direction.as_str().into(),
                t.into(),
                rec.log_norm_before[i].into(),
                rec.log_norm_after[i].exp().into(),
                rec.mean_theta[i].into(),
                rec.mean_p[i].into(),
                (k * t as f64).into(),
            ]);
        }
    }
    let mut outcome = Outcome::new(series);
    let fwd = &echo.forward;
    let mut worst_drift: f64 = 0.0;
    let mut worst_theta: f64 = 0.0;
    for i in 0..fwd.len() {
        let t = fwd.times[i];
        if t >= 2 {
            worst_drift = worst_drift.max((fwd.mean_p[i] / (k * t as f64) - 1.0).abs());
            worst_theta = worst_theta.max((fwd.mean_theta[i] / THETA_C - 1.0).abs());
        }
    }
    if n >= 2 {
        outcome.checks.push(Check::new(
            "forward_drift",
            worst_drift,
            0.0,
            format!("relative {}", tolerances::DRIFT_REL),
            worst_drift <= tolerances::DRIFT_REL,
        ));
        outcome.checks.push(Check::new(
            "forward_theta_lock",
            worst_theta,
            0.0,
            format!("relative {}", tolerances::THETA_REL),
            worst_theta <= tolerances::THETA_REL,
        ));
    }
    let retrace = retrace_error(&echo.backward, k);
    outcome.checks.push(Check::new(
        "backward_retrace",
        retrace,
        0.0,
        format!(
            "relative {} (absolute {}·K at t_0)",
            tolerances::RETRACE_REL,
            tolerances::RETRACE_ABS_AT_ORIGIN
        ),
        retrace <= 1.0,
    ));
    let plateau = echo.perturbed_norm;
    let target = THETA_C * THETA_C;
    outcome.checks.push(Check::new(
        "backward_norm_plateau",
        plateau,
        target,
        format!("relative {}", tolerances::PLATEAU_REL),
        (plateau / target - 1.0).abs() <= tolerances::PLATEAU_REL,
    ));
    Ok(outcome)
}

/// Worst backward `⟨p⟩` deviation from `K·t`, scaled so that 1 is the limit.
pub fn retrace_error(backward: &TrajectoryRecord, kick_strength: f64) -> f64 {
    backward
        .times
        .iter()
        .zip(&backward.mean_p)
        .map(|(&t, &p)| {
            let line = kick_strength * t as f64;
            if t == 0 {
                (p / kick_strength).abs() / tolerances::RETRACE_ABS_AT_ORIGIN
            } else {
                (p / line - 1.0).abs() / tolerances::RETRACE_REL
            }
        })
        .fold(0.0, f64::max)
}

fn snapshot_table(snap: &DistributionSnapshot) -> Table {
    let mut t = Table::new(match snap.axis {
        Axis::Position => &["theta", "probability"],
        Axis::Momentum => &["p", "probability"],
    });
    for (x, p) in snap.coordinates.iter().zip(&snap.probabilities) {
        t.push(vec![(*x).into(), (*p).into()]);
    }
    t
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::Position => "position",
        Axis::Momentum => "momentum",
    }
}

fn run_distributions(config: &RunConfig) -> Result<Outcome> {
    let params = config.params;
    let n = params.n_kicks;
    let engine = OtocEngine::new(params, Normalization::Pinned)?;
    let echo = engine.echo_with_snapshots(engine.initial(), n, &config.snapshot_times)?;

    let mut labelled: Vec<(&str, Option<Direction>, usize, DistributionSnapshot)> = Vec::new();
    for rec in [&echo.forward, &echo.backward] {
        for s in &rec.snapshots {
            labelled.push(("psi", s.direction, s.time.unwrap_or(0), s.clone()));
        }
    }
    for axis in [Axis::Position, Axis::Momentum] {
        let s = observables::snapshot(engine.grid(), &echo.perturbed, axis, true)?;
        labelled.push(("theta_psi", None, n, s));
    }

    let mut series = Table::new(&DISTRIBUTION_COLUMNS);
    let mut outcome_snaps = Vec::new();
    let mut perturbed_tail = None;
    for (state, dir, t, snap) in &labelled {
        let dir_name = dir.map_or("pivot", |d| d.as_str());
        let file = format!("{state}_{dir_name}_t{t:02}_{}.csv", axis_name(snap.axis));
        let fit = match snap.axis {
            Axis::Momentum => observables::fit_power_law_tail(snap).ok(),
            Axis::Position => None,
        };
        if *state == "theta_psi" && snap.axis == Axis::Momentum {
            perturbed_tail = Some(fit.as_ref().map_or(f64::NAN, |f| f.exponent));
        }
        series.push(vec![
            (*state).into(),
            dir_name.into(),
            (*t).into(),
            axis_name(snap.axis).into(),
            snap.coordinates[snap.peak_index()].into(),
            fit.as_ref().map(|f| f.p_c).into(),
            fit.as_ref().map(|f| f.exponent).into(),
            fit.as_ref().map(|f| f.residual).into(),
            format!("snapshots/{file}").as_str().into(),
        ]);
        outcome_snaps.push((file, snapshot_table(snap)));
    }
    let mut outcome = Outcome::new(series);
    outcome.snapshots = outcome_snaps;
    let exponent = perturbed_tail.unwrap_or(f64::NAN);
    let (lo, hi) = tolerances::TAIL_RANGE;
    outcome.checks.push(Check::new(
        "perturbed_tail_exponent",
        exponent,
        -2.0,
        format!("within [{lo}, {hi}]"),
        (lo..=hi).contains(&exponent),
    ));
    Ok(outcome)
}

fn run_lambda_scan(config: &RunConfig) -> Result<Outcome> {
    let window = GrowthWindow {
        n_kicks: config.params.n_kicks,
        ..GrowthWindow::default()
    };
    let points = config
        .lambdas
        .par_iter()
        .map(|&l| observables::norm_growth_scan(&config.params, &[l], window))
        .collect::<Result<Vec<_>>>()?;
    let mut series = Table::new(&LAMBDA_COLUMNS);
    for p in points.iter().flatten() {
        series.push(vec![p.lambda.into(), p.rate.into()]);
    }
    let mut outcome = Outcome::new(series);
    let flat: Vec<_> = points.into_iter().flatten().collect();
    if let Some(p) = flat.iter().find(|p| p.lambda == 0.0) {
        outcome.checks.push(Check::new(
            "unitary_growth_rate",
            p.rate.abs(),
            0.0,
            format!("below {}", tolerances::UNITARY_RATE),
            p.rate.abs() < tolerances::UNITARY_RATE,
        ));
    }
    // numerically apparent onset only, not a phase boundary
    let onset = flat.iter().find(|p| p.rate > 1e-3).map(|p| p.lambda);
    outcome.notes.insert(
        "apparent_onset".into(),
        onset.map_or("none in range".into(), format_float),
    );
    Ok(outcome)
}

fn rel_error(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn run_oracle(config: &RunConfig) -> Result<Outcome> {
    let params = config.params;
    let pivots = config.pivots();
    let modes = [Normalization::Unnormalized, Normalization::Pinned];
    let jobs: Vec<(Normalization, u32, usize)> = modes
        .iter()
        .flat_map(|&mode| {
            let pivots = &pivots;
            config
                .m_values
                .iter()
                .flat_map(move |&m| pivots.iter().map(move |&t| (mode, m, t)))
        })
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(mode, m, t)| {
            let pipeline = OtocEngine::new(params, mode)?.compute_point(m, t)?;
            let oracle = dense_oracle(&params, m, t, mode)?;
            Ok((pipeline, oracle))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut series = Table::new(&ORACLE_COLUMNS);
    let mut worst: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    for (&(mode, m, t), (p, o)) in jobs.iter().zip(&results) {
        let mode_name = match mode {
            Normalization::Pinned => "pinned",
            Normalization::Unnormalized => "unnormalized",
        };
        let mut quantities = vec![
            ("C", p.c, o.c),
            ("C1", p.c1, o.c1),
            ("C2", p.c2, o.c2),
            ("ReC3", p.c3.re, o.re_c3),
        ];
        if let Some(comm) = o.c_commutator {
            let e = rel_error(o.c, comm);
            worst_identity = worst_identity.max(e);
            quantities.push(("C_commutator", p.c, comm));
        }
        for (name, a, b) in quantities {
            let e = rel_error(a, b);
            if name != "C_commutator" {
                worst = worst.max(e);
            }
            series.push(vec![
                t.into(),
                m.into(),
                params.dim.into(),
                mode_name.into(),
                name.into(),
                a.into(),
                b.into(),
                e.into(),
            ]);
        }
    }
    let mut outcome = Outcome::new(series);
    outcome.checks.push(Check::new(
        "oracle_agreement",
        worst,
        0.0,
        format!("relative {}", tolerances::ORACLE_REL),
        worst < tolerances::ORACLE_REL,
    ));
    outcome.checks.push(Check::new(
        "expansion_identity",
        worst_identity,
        0.0,
        format!("relative {}", tolerances::IDENTITY_REL),
        worst_identity < tolerances::IDENTITY_REL,
    ));
    Ok(outcome)
}
