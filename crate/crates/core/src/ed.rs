//! Exact steady states on the `(J, M)` grid with a choice of truncation.
//!
//! The automatic policy grows a retained window until the probability flux
//! leaking through its boundary is negligible and the observables stop
//! moving. The window has two boundaries: the `J_max` rim and a per-ladder
//! cap on the height `J + M`. Below threshold the population sits at the
//! bottom of ladders with large `J`, near it the ladders with small `J` are
//! filled, so a cap per ladder keeps the space small in both phases.

use serde::{Deserialize, Serialize};

use crate::dicke::StateSpace;
use crate::error::{Error, Result};
use crate::observables::{compute_observables, ObservablesRecord};
use crate::params::ModelParams;
use crate::rates::{build_rate_matrix, channel_rates, RateMatrix};
use crate::steady::{solve, PopulationVector, SolveOptions, SolverWarning};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoTruncation {
    /// Stop once total leaked flux is below this.
    pub leak_tol: f64,
    /// and the observables moved less than this against the previous window.
    pub drift_tol: f64,
    /// Initial `2 J_max`; defaults to `2 max(64, 4 sqrt(N))`.
    pub initial_two_j_max: Option<u32>,
    /// Initial cap on `J + M` for every ladder.
    pub initial_height: u32,
    pub max_levels: usize,
}

impl Default for AutoTruncation {
    fn default() -> Self {
        Self {
            leak_tol: 1e-10,
            drift_tol: 1e-6,
            initial_two_j_max: None,
            initial_height: 16,
            max_levels: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationPolicy {
    Full,
    /// Keep ladders with `2J <= two_j_max`, all heights.
    Fixed { two_j_max: u32 },
    Auto(AutoTruncation),
}

impl TruncationPolicy {
    /// The full space for small ensembles, the automatic window otherwise.
    pub fn default_for(n_atoms: u32) -> Self {
        if n_atoms <= 100 {
            TruncationPolicy::Full
        } else {
            TruncationPolicy::Auto(AutoTruncation::default())
        }
    }
}

#[derive(Debug, Clone)]
pub struct EdSolution {
    pub populations: PopulationVector,
    pub observables: ObservablesRecord,
    /// Number of windows solved.
    pub levels: usize,
    /// Largest observable change against the comparison window.
    pub drift: Option<f64>,
}

/// Largest absolute change of the per-atom observables.
pub fn observable_drift(a: &ObservablesRecord, b: &ObservablesRecord) -> f64 {
    [
        a.sigz_mean - b.sigz_mean,
        a.jpjm_per_atom() - b.jpjm_per_atom(),
        a.jz_var_per_atom() - b.jz_var_per_atom(),
        a.xi2 - b.xi2,
        a.sf - b.sf,
    ]
    .iter()
    .fold(0.0f64, |m, x| m.max(x.abs()))
}

fn solve_on(p: &ModelParams, space: &StateSpace, hint: Option<&PopulationVector>) -> Result<(RateMatrix, PopulationVector)> {
    let r = build_rate_matrix(p, space);
    let pin = hint.and_then(|h| {
        let s = h.space.state(h.argmax()).ok()?;
        space.lookup(&s)
    });
    let pv = solve(
        &r,
        &SolveOptions {
            pin,
            leak_warning: f64::INFINITY,
            ..Default::default()
        },
    )?;
    Ok((r, pv))
}

pub fn solve_ed(p: &ModelParams, policy: &TruncationPolicy) -> Result<EdSolution> {
    p.validate()?;
    match policy {
        TruncationPolicy::Full => solve_ed_on(p, &StateSpace::full(p.n_atoms)),
        TruncationPolicy::Fixed { two_j_max } => solve_ed_on(p, &StateSpace::truncated(p.n_atoms, Some(*two_j_max))),
        TruncationPolicy::Auto(a) => solve_auto(p, a),
    }
}

/// Solves on a given window; the window is not adapted.
pub fn solve_ed_on(p: &ModelParams, space: &StateSpace) -> Result<EdSolution> {
    p.validate()?;
    if space.n_atoms() != p.n_atoms {
        return Err(Error::InvalidParams(format!(
            "state space is for {} atoms, parameters for {}",
            space.n_atoms(),
            p.n_atoms
        )));
    }
    let r = build_rate_matrix(p, space);
    let pv = solve(&r, &SolveOptions::default())?;
    let observables = compute_observables(&pv);
    Ok(EdSolution {
        populations: pv,
        observables,
        levels: 1,
        drift: None,
    })
}

/// Leaked flux through the `J_max` rim, and through each ladder's height
/// cap charged to the ladder it would have entered.
fn ladder_leaks(p: &ModelParams, r: &RateMatrix, pv: &PopulationVector) -> (f64, Vec<f64>) {
    let space = r.space();
    let mut per_ladder = vec![0.0; space.n_ladders()];
    let mut lj = 0.0;
    for (k, s) in space.iter().enumerate() {
        lj += pv.p[k] * r.leakage_j()[k];
        if r.leakage_h()[k] > 0.0 && pv.p[k] > 0.0 {
            for t in channel_rates(p, s) {
                if t.to.two_j <= space.two_j_max() && !space.contains(&t.to) {
                    let l = ((t.to.two_j - space.two_j_min()) / 2) as usize;
                    per_ladder[l] += pv.p[k] * t.rate;
                }
            }
        }
    }
    (lj, per_ladder)
}

fn solve_auto(p: &ModelParams, a: &AutoTruncation) -> Result<EdSolution> {
    let n = p.n_atoms;
    let parity = n % 2;
    let start = a
        .initial_two_j_max
        .unwrap_or_else(|| 2 * (64.0f64).max(4.0 * f64::from(n).sqrt()).ceil() as u32)
        .min(n);
    let mut caps: Vec<u32> = StateSpace::truncated(n, Some(start))
        .caps()
        .iter()
        .map(|&c| c.min(a.initial_height))
        .collect();
    let mut prev: Option<(ObservablesRecord, PopulationVector)> = None;
    let mut levels = 0;
    while levels < a.max_levels {
        levels += 1;
        let space = StateSpace::from_caps(n, caps.clone());
        let (r, pv) = solve_on(p, &space, prev.as_ref().map(|x| &x.1))?;
        let obs = compute_observables(&pv);
        let (lj, per_ladder) = ladder_leaks(p, &r, &pv);
        let total = lj + per_ladder.iter().sum::<f64>();
        if total < a.leak_tol {
            let reference = match &prev {
                Some((o, _)) => Some(*o),
                None if !space.is_complete() => {
                    // first window already tight: compare with a halved one
                    let half: Vec<u32> = caps[..caps.len().div_ceil(2)].iter().map(|c| (c / 2).max(1)).collect();
                    let hs = StateSpace::from_caps(n, half);
                    let (_, hp) = solve_on(p, &hs, Some(&pv))?;
                    Some(compute_observables(&hp))
                }
                None => None,
            };
            let drift = reference.map(|o| observable_drift(&o, &obs));
            if drift.map_or(true, |d| d < a.drift_tol) {
                return Ok(finish(pv, obs, levels, drift, total));
            }
        }
        if space.is_complete() {
            return Ok(finish(pv, obs, levels, None, total));
        }
        // grow the leakiest ladders until what is left ungrown is small
        let lh = total - lj;
        let mut order: Vec<usize> = (0..per_ladder.len()).filter(|&l| caps[l] < parity + 2 * l as u32).collect();
        order.sort_by(|&x, &y| per_ladder[y].total_cmp(&per_ladder[x]));
        let mut remaining = order.iter().map(|&l| per_ladder[l]).sum::<f64>();
        let mut grew = false;
        for l in order {
            let tight = total < a.leak_tol;
            if !tight && (lh <= a.leak_tol / 2.0 || remaining <= a.leak_tol / 4.0) {
                break;
            }
            remaining -= per_ladder[l];
            caps[l] = (caps[l] * 2).max(1).min(parity + 2 * l as u32);
            grew = true;
        }
        // the populated region is smooth in (J, h): neighbouring caps may
        // differ by at most one rung of the shorter ladder
        for l in 1..caps.len() {
            caps[l] = caps[l].max(caps[l - 1].saturating_sub(2)).min(parity + 2 * l as u32);
        }
        for l in (0..caps.len().saturating_sub(1)).rev() {
            caps[l] = caps[l].max(caps[l + 1].saturating_sub(2)).min(parity + 2 * l as u32);
        }
        let top = space.two_j_max();
        if top < n && (lj > a.leak_tol / 2.0 || total < a.leak_tol || !grew) {
            let new_top = (top * 2).min(n);
            let top_cap = *caps.last().unwrap_or(&a.initial_height);
            let mut tj = top + 2;
            while tj <= new_top {
                caps.push(top_cap.max(a.initial_height).min(tj));
                tj += 2;
            }
        }
        prev = Some((obs, pv));
    }
    let (_, pv) = prev.expect("at least one level");
    Err(Error::SolverFailure {
        reason: format!(
            "automatic truncation did not converge in {} windows (last size {}, leaked flux {:e})",
            levels,
            pv.space.size(),
            pv.leaked_flux
        ),
        residual: pv.residual,
    })
}

fn finish(
    mut pv: PopulationVector,
    obs: ObservablesRecord,
    levels: usize,
    drift: Option<f64>,
    leaked: f64,
) -> EdSolution {
    pv.warnings.retain(|w| !matches!(w, SolverWarning::LeakedFlux { .. }));
    if leaked > 1e-8 {
        pv.warnings.push(SolverWarning::LeakedFlux {
            flux: leaked,
            threshold: 1e-8,
        });
    }
    EdSolution {
        populations: pv,
        observables: obs,
        levels,
        drift,
    }
}
