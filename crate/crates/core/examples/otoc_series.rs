//! C(t) and its three parts at the reference point.

use ptkr::{compute_otoc_series, OtocRequest, PredictionSet, SimParams};

fn main() -> ptkr::Result<()> {
    let params = SimParams::default();
    for m in 1..=3 {
        let series = compute_otoc_series(&OtocRequest {
            params,
            m,
            pivot: params.n_kicks,
        })?;
        let pred = PredictionSet::from_params(&params, m, None)?;
        println!(
            "m = {m}  (N^(2m-1) θc² = {:.4e}, C₂ = {:.4e})",
            pred.c_total, pred.c2
        );
        println!(
            "{:>3} {:>12} {:>12} {:>12} {:>12}",
            "t", "C", "C1", "C2", "Re C3"
        );
        for p in &series.points {
            println!(
                "{:>3} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}",
                p.pivot, p.c, p.c1, p.c2, p.c3.re
            );
        }
    }
    Ok(())
}
