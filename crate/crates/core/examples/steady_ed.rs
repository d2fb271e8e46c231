//! Exact steady state of a large ensemble on the (J, M) grid.
//!
//! `cargo run --release --example steady_ed -- 2000 1.5`

use badcavity::{solve_ed, ModelParams, TruncationPolicy};

fn main() -> badcavity::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u32 = args.next().map_or(2000, |s| s.parse().expect("N"));
    let r: f64 = args.next().map_or(1.5, |s| s.parse().expect("w / gamma"));

    let p = ModelParams::with_cooperativity(n, 10.0, 0.0);
    let p = p.w(r * p.gamma);
    let sol = solve_ed(&p, &TruncationPolicy::default_for(n))?;
    let o = &sol.observables;
    println!("N = {n}, w = {r} gamma, {} states after {} windows", sol.populations.space.size(), sol.levels);
    println!("<s_z>        {:.6}", o.sigz_mean);
    println!("<J+J->/N     {:.6}", o.jpjm_per_atom());
    println!("var(Jz)/N    {:.6}", o.jz_var_per_atom());
    println!("S_f          {:.6}", o.sf);
    println!("xi^2         {:.6}", o.xi2);
    if let Some(g2) = o.g2 {
        println!("g2(0)        {g2:.6}");
    }
    Ok(())
}
