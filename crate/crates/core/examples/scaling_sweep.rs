//! C(t_10) against N with log-log slopes.

use ptkr::observables::linear_fit;
use ptkr::{compute_otoc, OtocRequest, SimParams};

fn main() -> ptkr::Result<()> {
    let dims = [1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14];
    for m in 1..=3u32 {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &dim in &dims {
            let params = SimParams::default().with_dim(dim);
            let p = compute_otoc(&OtocRequest {
                params,
                m,
                pivot: 10,
            })?;
            println!("m = {m}  N = {dim:>5}  C = {:.4e}", p.c);
            x.push((dim as f64).ln());
            y.push(p.c.ln());
        }
        if let Some(fit) = linear_fit(&x, &y) {
            println!("m = {m}  slope = {:.3} (2m-1 = {})", fit.slope, 2 * m - 1);
        }
    }
    Ok(())
}
