//! Momentum tail of θψ(t_10), fitted on a log-log scale.

use ptkr::{fit_power_law_tail, snapshot, Axis, Normalization, OtocEngine, SimParams};

fn main() -> ptkr::Result<()> {
    let params = SimParams::default();
    let engine = OtocEngine::new(params, Normalization::Pinned)?;
    let echo = engine.echo(engine.initial(), params.n_kicks)?;
    let dist = snapshot(engine.grid(), &echo.perturbed, Axis::Momentum, true)?;
    let fit = fit_power_law_tail(&dist)?;

    println!("p_c = {:.4}", fit.p_c);
    println!("exponent = {:.4}", fit.exponent);
    for (side, ((lo, hi), e)) in fit.fit_windows.iter().zip(&fit.side_exponents).enumerate() {
        println!("  side {side}: cells {lo}..{hi}, exponent {e:.4}");
    }
    println!(
        "residual = {:.3}, power law: {}",
        fit.residual,
        fit.is_power_law()
    );
    Ok(())
}
