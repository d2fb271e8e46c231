//! Closed-form leading order on both sides of the critical point `w = gamma`.

use badcavity::cumulant::analytic_leading;
use badcavity::ModelParams;

fn main() -> badcavity::Result<()> {
    let n = 10_000;
    println!("{:>8} {:>7} {:>10} {:>12} {:>10} {:>10}", "w/gamma", "regime", "sz0", "jpjm0/N", "S_f", "xi2_1");
    for r in [0.25, 0.5, 0.9, 0.999, 1.0, 1.5, 3.0, 10.0] {
        let p = ModelParams::with_cooperativity(n, 10.0, 0.0);
        let a = analytic_leading(&p.w(r * p.gamma))?;
        println!(
            "{r:>8.3} {:>7} {:>10.5} {:>12.6} {:>10.5} {:>10.5}",
            format!("{:?}", a.regime),
            a.sz0,
            a.jpjm0 / f64::from(n),
            a.sf,
            a.xi2_1
        );
    }
    Ok(())
}
