//! Atoms spread over the cavity standing wave: output power and inversion
//! barely depend on how they are distributed.

use badcavity::cumulant::analytic_leading;
use badcavity::inhomogeneous::{inhom_observables, inhom_steady, InhomConfig};
use badcavity::ModelParams;

fn main() -> badcavity::Result<()> {
    let n = 10_000;
    let base = ModelParams::with_cooperativity(n, 10.0, 0.0);
    println!("{:>8} {:>6} {:>10} {:>10} {:>10}", "w/gamma", "bins", "<s_z>", "P/N", "S_f");
    for r in [0.5, 1.0, 1.5] {
        let p = base.w(r * base.gamma);
        for cfg in [InhomConfig::trapped(0.0, n), InhomConfig::uniform(10, n), InhomConfig::uniform(25, n)] {
            let o = inhom_observables(&inhom_steady(&cfg, &p)?, &cfg, &p);
            println!(
                "{r:>8.2} {:>6} {:>10.5} {:>10.6} {:>10.5}",
                cfg.bins(),
                2.0 * o.jz_mean / f64::from(n),
                o.power_per_atom(&p),
                o.sf
            );
        }
        let a = analytic_leading(&p)?;
        println!("{r:>8.2} {:>6} {:>10.5} {:>10.6}", "lead", a.sz0, a.jpjm0 / f64::from(n));
    }
    Ok(())
}
