//! Position/momentum transforms on the rotor grid.

use ptkr::{expectation, Grid, Observable, Representation};

fn main() -> ptkr::Result<()> {
    let grid = Grid::new(1024, 0.1)?;
    let psi = grid.gaussian(10.0)?;

    let p = grid.to_momentum(&psi)?;
    let back = grid.to_position(&p)?;
    let err = psi
        .amplitudes()
        .iter()
        .zip(back.amplitudes())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    println!("N = {}, dθ = {:.6}", grid.dim(), grid.theta_spacing());
    println!("norm (position) = {:.15}", psi.norm_squared());
    println!("norm (momentum) = {:.15}", p.norm_squared());
    println!("round-trip error = {err:.3e}");
    println!(
        "<p^2> = {:.6} (σħ²/2 = {:.6})",
        expectation(&grid, &p, Observable::MomentumPower(2))?,
        10.0 * 0.01 / 2.0
    );
    assert_eq!(back.representation(), Representation::Position);
    Ok(())
}
