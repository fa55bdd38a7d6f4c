//! Norm growth rate against the non-Hermiticity λ.

use ptkr::observables::GrowthWindow;
use ptkr::{norm_growth_scan, SimParams};

fn main() -> ptkr::Result<()> {
    let template = SimParams::default().with_dim(4096);
    let lambdas: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    for p in norm_growth_scan(&template, &lambdas, GrowthWindow::default())? {
        println!("λ = {:.1}  d ln N / dt = {:+.4}", p.lambda, p.rate);
    }
    Ok(())
}
