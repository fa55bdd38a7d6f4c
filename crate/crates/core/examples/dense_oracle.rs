//! Split-operator pipeline against explicit matrices at N = 32.

use ptkr::{dense_oracle, Normalization, OtocEngine, SimParams};

fn main() -> ptkr::Result<()> {
    let params = SimParams {
        kick_strength: 1.0,
        non_hermiticity: 0.0,
        hbar: 1.0,
        sigma: 10.0,
        dim: 32,
        n_kicks: 3,
    };
    let engine = OtocEngine::new(params, Normalization::Unnormalized)?;
    for m in 1..=2 {
        for t in 0..=params.n_kicks {
            let p = engine.compute_point(m, t)?;
            let o = dense_oracle(&params, m, t, Normalization::Unnormalized)?;
            let comm = o.c_commutator.expect("unnormalized oracle");
            println!(
                "m = {m} t = {t}  C = {:.12e}  oracle = {:.12e}  -<[θ(t),p^m]²> = {:.12e}",
                p.c, o.c, comm
            );
        }
    }
    Ok(())
}
