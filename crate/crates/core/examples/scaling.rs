//! Optimal squeezing against atom number and a power-law fit.

use badcavity::scan::{find_min_xi2, fit_power_law, Evaluator, Method};
use badcavity::ModelParams;

fn main() -> badcavity::Result<()> {
    let ev = Evaluator::new(Method::Ed);
    let mut pts = Vec::new();
    for n in [100, 200, 400, 800] {
        let p = ModelParams::with_cooperativity(n, 10.0, 0.0);
        let m = find_min_xi2(&p, &ev, Some((0.8 * p.gamma, 2.0 * p.gamma)), 1e-3)?;
        println!("N = {n:>5}: xi2_min = {:.5} at w = {:.4} gamma", m.value, m.w_star / p.gamma);
        pts.push((f64::from(n), m.value));
    }
    let fit = fit_power_law(&pts)?;
    println!("xi2_min ~ {:.3} N^{:.4}", fit.prefactor, fit.exponent);
    Ok(())
}
