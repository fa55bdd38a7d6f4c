use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// `C(t_j)` and its three parts for every pivot `t_1 … t_n`.
    OtocSeries,
    /// `C(t_n)` versus `N`, with log-log slopes.
    ScalingSweep,
    /// Forward and backward `⟨θ⟩`, `⟨p⟩` and norm traces of the `ψ` echo.
    Trajectory,
    /// Distribution dumps and power-law tail fits.
    Distributions,
    /// `Re C₃(t_n)` versus `N`.
    C3Scaling,
    /// Norm growth rate versus `λ`.
    LambdaScan,
    /// Pipeline versus dense-matrix oracle.
    OracleCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::OtocSeries,
        ExperimentKind::ScalingSweep,
        ExperimentKind::Trajectory,
        ExperimentKind::Distributions,
        ExperimentKind::C3Scaling,
        ExperimentKind::LambdaScan,
        ExperimentKind::OracleCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::OtocSeries => "otoc_series",
            ExperimentKind::ScalingSweep => "scaling_sweep",
            ExperimentKind::Trajectory => "trajectory",
            ExperimentKind::Distributions => "distributions",
            ExperimentKind::C3Scaling => "c3_scaling",
            ExperimentKind::LambdaScan => "lambda_scan",
            ExperimentKind::OracleCheck => "oracle_check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// Everything needed to reproduce one experiment.
///
/// `params.dim` is the grid size for single-`N` experiments; sweeps use
/// `dims`. Pivots default to `params.n_kicks` (or `1..=n_kicks` for
/// series, `0..=n_kicks` for the oracle check).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub preset: Option<String>,
    pub params: SimParams,
    pub m_values: Vec<u32>,
    pub dims: Vec<usize>,
    pub pivots: Option<Vec<usize>>,
    pub lambdas: Vec<f64>,
    pub snapshot_times: Vec<usize>,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub check: bool,
}

impl RunConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        let params = SimParams::default();
        RunConfig {
            kind,
            preset: None,
            params,
            m_values: vec![1, 2, 3],
            dims: vec![params.dim],
            pivots: None,
            lambdas: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            snapshot_times: vec![0, 5, 10],
            out_dir: PathBuf::from("out"),
            workers: default_workers(),
            check: false,
        }
    }

    /// Parses a flat `key = value` file. `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let kind = match pairs.iter().find(|(k, _)| k == "kind") {
            Some((_, v)) => v.parse()?,
            None => return Err(Error::Config("missing `kind`".into())),
        };
        let mut config = match pairs.iter().find(|(k, _)| k == "preset") {
            Some((_, name)) => super::presets::preset(name)?,
            None => RunConfig::new(kind),
        };
        config.kind = kind;
        for (k, v) in &pairs {
            if k != "kind" && k != "preset" {
                config.set(k, v)?;
            }
        }
        Ok(config)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" => self.kind = value.parse()?,
            "K" | "kick_strength" => self.params.kick_strength = parse_real(key, value)?,
            "lambda" | "non_hermiticity" => self.params.non_hermiticity = parse_real(key, value)?,
            "hbar" => self.params.hbar = parse_real(key, value)?,
            "sigma" => self.params.sigma = parse_real(key, value)?,
            "N" | "dim" => {
                self.params.dim = parse_one(key, value)?;
                self.dims = vec![self.params.dim];
            }
            "kicks" | "n_kicks" => self.params.n_kicks = parse_one(key, value)?,
            "m" => self.m_values = parse_list(key, value)?,
            "dims" => self.dims = parse_list(key, value)?,
            "pivots" => self.pivots = Some(parse_list(key, value)?),
            "lambdas" => self.lambdas = parse_list(key, value)?,
            "snapshot_times" => self.snapshot_times = parse_list(key, value)?,
            "workers" => self.workers = parse_one(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "check" => {
                self.check = value.parse().map_err(|_| {
                    Error::Config(format!("`check` expects true/false, got `{value}`"))
                })?
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.m_values.is_empty() || self.m_values.contains(&0) {
            return Err(Error::Config(
                "`m` must be a non-empty list of integers >= 1".into(),
            ));
        }
        if self.dims.is_empty() {
            return Err(Error::Config("`dims` must not be empty".into()));
        }
        for &d in &self.dims {
            self.params.with_dim(d).validate()?;
        }
        if let Some(p) = &self.pivots {
            if p.is_empty() {
                return Err(Error::Config("`pivots` must not be empty".into()));
            }
        }
        if self.kind == ExperimentKind::LambdaScan
            && (self.lambdas.is_empty() || self.lambdas.iter().any(|l| l.is_nan() || *l < 0.0))
        {
            return Err(Error::Config(
                "`lambdas` must be a non-empty list of values >= 0".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::Config("`workers` must be >= 1".into()));
        }
        Ok(())
    }

    pub fn pivots(&self) -> Vec<usize> {
        match (&self.pivots, self.kind) {
            (Some(p), _) => p.clone(),
            (None, ExperimentKind::OtocSeries) => (1..=self.params.n_kicks).collect(),
            (None, ExperimentKind::OracleCheck) => (0..=self.params.n_kicks).collect(),
            (None, _) => vec![self.params.n_kicks],
        }
    }

    /// SHA-256 of the canonical JSON form (output location and worker count
    /// excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn parse_real(key: &str, value: &str) -> Result<f64> {
    let v = value.trim();
    let parsed = if let Some(mult) = v.strip_suffix("pi") {
        let mult = mult.trim().trim_end_matches('*');
        let m = if mult.is_empty() {
            Ok(1.0)
        } else {
            mult.parse::<f64>()
        };
        m.map(|m| m * std::f64::consts::PI)
    } else {
        v.parse::<f64>()
    };
    parsed.map_err(|_| Error::Config(format!("`{key}` expects a number, got `{value}`")))
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_one(key, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn defaults_follow_the_reference_point() {
        let c = RunConfig::new(ExperimentKind::OtocSeries);
        assert_eq!(c.params, SimParams::default());
        assert!((c.params.kick_strength - 2.0 * PI).abs() < 1e-15);
        assert_eq!(c.pivots(), (1..=10).collect::<Vec<_>>());
        c.validate().unwrap();
    }

    #[test]
    fn parses_flat_file_with_comments() {
        let text = "
            # scaling run
            kind = scaling_sweep
            K = 2pi
            lambda = 0.9   # broken phase
            dims = 1024, 2048
            m = 1,2
            kicks = 4
        ";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.kind, ExperimentKind::ScalingSweep);
        assert!((c.params.kick_strength - 2.0 * PI).abs() < 1e-15);
        assert_eq!(c.dims, vec![1024, 2048]);
        assert_eq!(c.m_values, vec![1, 2]);
        assert_eq!(c.pivots(), vec![4]);
    }

    #[test]
    fn overrides_and_errors() {
        let mut c = RunConfig::new(ExperimentKind::Trajectory);
        c.apply_override("N=1024").unwrap();
        assert_eq!(c.params.dim, 1024);
        assert_eq!(c.dims, vec![1024]);
        assert!(c.apply_override("nonsense").is_err());
        assert!(c.apply_override("bogus=1").is_err());
        assert!(c.apply_override("lambda=abc").is_err());
        c.apply_override("N=1000").unwrap();
        assert!(c.validate().is_err());
        assert!(RunConfig::parse("lambda = 0.1").is_err());
        assert!(RunConfig::parse("kind = nope").is_err());
    }

    #[test]
    fn hash_ignores_execution_settings() {
        let mut a = RunConfig::new(ExperimentKind::OtocSeries);
        let mut b = a.clone();
        b.workers = 1;
        b.out_dir = PathBuf::from("elsewhere");
        b.check = true;
        assert_eq!(a.hash(), b.hash());
        a.params.hbar = 0.2;
        assert_ne!(a.hash(), b.hash());
    }
}
