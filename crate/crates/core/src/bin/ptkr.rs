use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ptkr::experiment::{self, preset, RunConfig};

/// Runs OTOC experiments on the PT-symmetric kicked rotor.
#[derive(Parser)]
#[command(name = "ptkr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named preset or a key=value config file.
    Run {
        /// Preset name (fig1a, fig1b, fig2, fig3, fig4, fig6, lambda_scan, oracle) or config path.
        target: String,
        #[command(flatten)]
        common: Common,
    },
    /// C(t_n) versus N for every m.
    Sweep(Common),
    /// Pipeline against the dense-matrix oracle.
    Oracle(Common),
    /// Norm growth rate versus λ.
    ScanLambda(Common),
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Exit nonzero unless every acceptance check passes.
    #[arg(long)]
    check: bool,
    /// Worker threads for concurrent points.
    #[arg(long)]
    workers: Option<usize>,
    /// Override a config key, e.g. `--override N=4096`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(target: &str) -> ptkr::Result<RunConfig> {
    if experiment::PRESETS.contains(&target) {
        preset(target)
    } else if Path::new(target).is_file() {
        RunConfig::from_file(Path::new(target))
    } else {
        Err(ptkr::Error::Config(format!(
            "`{target}` is neither a preset ({}) nor a config file",
            experiment::PRESETS.join(", ")
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (base, common) = match cli.command {
        Command::Run { target, common } => (load(&target), common),
        Command::Sweep(c) => (Ok(experiment::presets::default_sweep()), c),
        Command::Oracle(c) => (preset("oracle"), c),
        Command::ScanLambda(c) => (preset("lambda_scan"), c),
    };
    let config = base.and_then(|mut config| {
        for o in &common.overrides {
            config.apply_override(o)?;
        }
        config.out_dir = common.out.clone();
        config.check |= common.check;
        if let Some(w) = common.workers {
            config.workers = w;
        }
        config.validate()?;
        Ok(config)
    });
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let manifest = match experiment::run(&config) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    for c in &manifest.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} {} value={:.6e} target={:.6e} ({})",
            c.name, c.value, c.target, c.tolerance
        );
    }
    println!("wrote {}", config.out_dir.join("manifest.json").display());
    if manifest.failed {
        eprintln!(
            "error: {}",
            manifest.error.as_deref().unwrap_or("run failed")
        );
        return ExitCode::from(3);
    }
    if manifest.succeeded(config.check) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
