//! Forward evolution in the broken phase: norm growth, θ locking and drift.

use ptkr::{Direction, Grid, NormPolicy, PhaseFactors, SimParams};

fn main() -> ptkr::Result<()> {
    let params = SimParams::default();
    let grid = Grid::from_params(&params)?;
    let factors = PhaseFactors::new(&grid, &params)?;
    let psi = grid.gaussian(params.sigma)?;

    println!(
        "PT defect of kick array: {:.2e}",
        factors.pt_symmetry_defect()
    );

    let (_, free) = factors.evolve(&psi, params.n_kicks, Direction::Forward, NormPolicy::None)?;
    let (_, pinned) = factors.evolve(
        &psi,
        params.n_kicks,
        Direction::Forward,
        NormPolicy::PinTo(1.0),
    )?;

    println!(
        "{:>3} {:>14} {:>10} {:>10} {:>10}",
        "t", "ln N(t)", "<θ>", "<p>", "K t"
    );
    for i in 0..pinned.len() {
        let t = pinned.times[i];
        println!(
            "{t:>3} {:>14.4} {:>10.5} {:>10.4} {:>10.4}",
            free.log_norm_after[i],
            pinned.mean_theta[i],
            pinned.mean_p[i],
            params.kick_strength * t as f64
        );
    }
    Ok(())
}
