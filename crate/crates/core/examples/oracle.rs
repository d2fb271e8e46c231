//! Rate equations on the Dicke grid against the full master equation.

use badcavity::oracle::{oracle_observables, oracle_steady};
use badcavity::{solve_ed, ModelParams, TruncationPolicy};

fn main() -> badcavity::Result<()> {
    for n in 2..=4 {
        for (w, t2_inv) in [(0.05, 0.0), (0.2, 0.0), (0.2, 0.2)] {
            let p = ModelParams::new(n, 0.1, w).t2_inv(t2_inv);
            let ed = solve_ed(&p, &TruncationPolicy::Full)?.observables;
            let me = oracle_observables(&oracle_steady(&p)?);
            println!(
                "N = {n}, w = {w}, 1/T2 = {t2_inv}: xi2 {:.10} vs {:.10}, <J+J-> {:.10} vs {:.10}",
                ed.xi2, me.xi2, ed.jpjm, me.jpjm
            );
        }
    }
    Ok(())
}
