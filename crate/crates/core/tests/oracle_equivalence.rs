use badcavity::oracle::{oracle_observables, oracle_steady};
use badcavity::{build_rate_matrix, compute_observables, steady_state, ModelParams, ObservablesRecord, StateSpace};

fn ed(p: &ModelParams) -> ObservablesRecord {
    let r = build_rate_matrix(p, &StateSpace::full(p.n_atoms));
    compute_observables(&steady_state(&r, 1e-13).unwrap())
}

fn max_field_diff(a: &ObservablesRecord, b: &ObservablesRecord) -> f64 {
    let mut d = [
        a.jz_mean - b.jz_mean,
        a.jz_var - b.jz_var,
        a.jpjm - b.jpjm,
        a.j2_mean - b.j2_mean,
        a.sf - b.sf,
        a.xi2 - b.xi2,
        a.sigz_mean - b.sigz_mean,
        a.spm_corr - b.spm_corr,
        a.jp2jm2.unwrap() - b.jp2jm2.unwrap(),
    ]
    .iter()
    .fold(0.0f64, |m, x| m.max(x.abs()));
    if let (Some(x), Some(y)) = (a.g2, b.g2) {
        d = d.max((x - y).abs());
    }
    d
}

#[test]
fn small_ensembles_match_the_full_master_equation() {
    let gamma = 0.1;
    for n in 2..=4u32 {
        for k in 0..10 {
            let w = gamma * (0.2 + 2.8 * f64::from(k) / 9.0);
            for t2 in [0.0, 0.5 * w, 2.0 * w] {
                let p = ModelParams::new(n, gamma, w).t2_inv(t2);
                let a = ed(&p);
                let b = oracle_observables(&oracle_steady(&p).unwrap());
                let d = max_field_diff(&a, &b);
                assert!(d < 1e-8, "N={n} w={w} 1/T2={t2}: max difference {d:e}\n{a:?}\n{b:?}");
            }
        }
    }
}
