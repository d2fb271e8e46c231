//! Mean-field, second- and third-order cumulant steady states side by side.

use badcavity::cumulant::{cumulant_steady, meanfield_steady, observables_from_cumulants, Order};
use badcavity::ModelParams;

fn main() -> badcavity::Result<()> {
    let n = 100_000;
    println!("{:>8} {:>12} {:>12} {:>12} {:>12}", "w/gamma", "mf <s_z>", "c2 xi2", "c3 xi2", "c3 S_f");
    for r in [0.5, 0.9, 0.95, 1.0, 1.05, 1.2, 2.0] {
        let p = ModelParams::with_cooperativity(n, 10.0, 0.0);
        let p = p.w(r * p.gamma);
        let mf = meanfield_steady(&p);
        let c2 = observables_from_cumulants(&cumulant_steady(&p, Order::Second)?, n);
        let c3 = observables_from_cumulants(&cumulant_steady(&p, Order::Third)?, n);
        println!(
            "{r:>8.3} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            mf.state.sz, c2.xi2, c3.xi2, c3.sf
        );
    }
    Ok(())
}
