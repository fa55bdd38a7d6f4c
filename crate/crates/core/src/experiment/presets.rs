//! Named run configurations.

use super::config::{ExperimentKind, RunConfig};
use crate::error::{Error, Result};

pub const PRESETS: [&str; 8] = [
    "fig1a",
    "fig1b",
    "fig2",
    "fig3",
    "fig4",
    "fig6",
    "lambda_scan",
    "oracle",
];

const SWEEP_DIMS: [usize; 5] = [1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14];

pub fn preset(name: &str) -> Result<RunConfig> {
    let mut c = match name {
        // C(t) and its parts at N = 2^13
        "fig1a" | "fig4" => RunConfig::new(ExperimentKind::OtocSeries),
        "fig1b" => {
            let mut c = RunConfig::new(ExperimentKind::ScalingSweep);
            c.dims = SWEEP_DIMS.to_vec();
            c
        }
        "fig2" => RunConfig::new(ExperimentKind::Trajectory),
        "fig3" => RunConfig::new(ExperimentKind::Distributions),
        "fig6" => {
            let mut c = RunConfig::new(ExperimentKind::C3Scaling);
            c.dims = SWEEP_DIMS.to_vec();
            c
        }
        "lambda_scan" => {
            let mut c = RunConfig::new(ExperimentKind::LambdaScan);
            c.params.dim = 1 << 12;
            c.params.n_kicks = 20;
            c
        }
        "oracle" => {
            let mut c = RunConfig::new(ExperimentKind::OracleCheck);
            c.params.non_hermiticity = 0.0;
            c.params.dim = 32;
            c.params.n_kicks = 3;
            c.dims = vec![32];
            c.m_values = vec![1, 2];
            c
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (known: {})",
                PRESETS.join(", ")
            )))
        }
    };
    c.preset = Some(name.to_string());
    Ok(c)
}

/// The `sweep` subcommand's default.
pub fn default_sweep() -> RunConfig {
    preset("fig1b").expect("built-in preset")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            c.validate().unwrap();
            assert_eq!(c.preset.as_deref(), Some(name));
        }
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn oracle_preset_is_small_and_hermitian() {
        let c = preset("oracle").unwrap();
        assert_eq!(c.params.dim, 32);
        assert_eq!(c.params.non_hermiticity, 0.0);
        assert_eq!(c.pivots(), vec![0, 1, 2, 3]);
    }
}
