//! From a three-level repump scheme to effective rates, then to the
//! steady state with the induced dephasing.

use badcavity::cumulant::{cumulant_steady, observables_from_cumulants, Order};
use badcavity::{effective_pump_rates, ModelParams, PumpLevelScheme};

fn main() -> badcavity::Result<()> {
    let n = 10_000;
    for omega_p in [0.2, 0.4, 0.6, 0.8] {
        let scheme = PumpLevelScheme {
            omega_p,
            gamma_p: 1.0,
            gamma_a: 0.5,
            big_gamma: 10.0,
        };
        let e = effective_pump_rates(&scheme)?;
        let p = ModelParams::new(n, 0.1, e.w).t2_inv(e.t2_inv);
        let o = observables_from_cumulants(&cumulant_steady(&p, Order::Third)?, n);
        println!(
            "omega_p = {omega_p}: w = {:.5}, 1/T2 = {:.5}, alpha = {:.3}, xi2 = {:.5}, S_f = {:.5}",
            e.w, e.t2_inv, e.alpha, o.xi2, o.sf
        );
    }
    Ok(())
}
