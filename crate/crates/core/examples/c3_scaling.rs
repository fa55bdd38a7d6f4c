//! Re C₃(t_10) against N: suppressed for odd m, linear in N for even m.

use ptkr::observables::linear_fit;
use ptkr::{compute_otoc, OtocRequest, SimParams};

fn main() -> ptkr::Result<()> {
    let dims = [1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14];
    for m in [1u32, 2] {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &dim in &dims {
            let params = SimParams::default().with_dim(dim);
            let p = compute_otoc(&OtocRequest {
                params,
                m,
                pivot: 10,
            })?;
            println!(
                "m = {m}  N = {dim:>5}  Re C3 = {:+.4e}  |Re C3|/C1 = {:.2e}",
                p.c3.re,
                (p.c3.re / p.c1).abs()
            );
            x.push(dim as f64);
            y.push(p.c3.re);
        }
        if let Some(fit) = linear_fit(&x, &y) {
            println!(
                "m = {m}  slope = {:+.3e}  R² = {:.3}",
                fit.slope, fit.r_squared
            );
        }
    }
    Ok(())
}
