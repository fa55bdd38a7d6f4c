//! Runs a named preset into a directory and prints its checks.
//!
//! `cargo run --release --example run_preset -- fig3 /tmp/fig3`

use std::path::PathBuf;

use ptkr::experiment::{preset, run};

fn main() -> ptkr::Result<()> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "oracle".into());
    let mut config = preset(&name)?;
    config.out_dir = args
        .next()
        .map_or_else(|| std::env::temp_dir().join(&name), PathBuf::from);

    let manifest = run(&config)?;
    for f in &manifest.files {
        println!("{:<48} {:>6} rows", f.path, f.rows);
    }
    for c in &manifest.checks {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    println!(
        "manifest: {}",
        config.out_dir.join("manifest.json").display()
    );
    Ok(())
}
