//! Writes the rate matrix of a small ensemble as `row col value` triples.

use badcavity::{build_rate_matrix, ModelParams, StateSpace};

fn main() -> std::io::Result<()> {
    let p = ModelParams::new(4, 0.1, 0.15).t2_inv(0.05);
    let space = StateSpace::full(p.n_atoms);
    for (i, s) in space.iter().enumerate() {
        eprintln!("{i}: 2J = {}, 2M = {}", s.two_j, s.two_m);
    }
    build_rate_matrix(&p, &space).write_coo(std::io::stdout().lock())
}
