//! A repump sweep through the critical point with exact diagonalization.

use badcavity::scan::{linspace, sweep_w, Evaluator, Method};
use badcavity::ModelParams;

fn main() -> badcavity::Result<()> {
    let p = ModelParams::with_cooperativity(400, 10.0, 0.0);
    let grid = linspace(0.5 * p.gamma, 2.0 * p.gamma, 16);
    let res = sweep_w(&p, &grid, &Evaluator::new(Method::Ed))?;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "w/gamma", "<J+J->/N", "var/N", "S_f", "xi2");
    for (w, o) in res.grid.iter().zip(&res.records) {
        println!(
            "{:>8.3} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            w / p.gamma,
            o.jpjm_per_atom(),
            o.jz_var_per_atom(),
            o.sf,
            o.xi2
        );
    }
    let (w, o) = res.argmin_by(|o| o.xi2).expect("non-empty sweep");
    println!("smallest xi2 on the grid: {:.5} at w = {:.3} gamma", o.xi2, w / p.gamma);
    Ok(())
}
