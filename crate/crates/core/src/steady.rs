//! Stationary populations of a [`RateMatrix`].
//!
//! The direct route pins one population (`p_r = 1`), which replaces row
//! `r` of `R p = 0` by a scaled identity row. The modified matrix stays
//! inside the skyline envelope of `R` and remains column diagonally
//! dominant, so elimination without pivoting is stable and deterministic.
//! Normalising afterwards gives `sum p = 1`.
//!
//! The fallback is inverse iteration on `R - sigma I` with a small
//! positive shift, which converges to the Perron vector without pinning.

use serde::{Deserialize, Serialize};

use crate::dicke::StateSpace;
use crate::error::{Error, Result};
use crate::rates::RateMatrix;
use crate::skyline::Skyline;

/// Populations below this are treated as round-off and clipped to zero.
pub const CLIP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    Direct,
    InverseIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SolverWarning {
    /// Probability flux lost through the truncation rim exceeds the threshold.
    LeakedFlux { flux: f64, threshold: f64 },
    /// Tiny negative populations were set to zero.
    Clipped { count: usize, most_negative: f64 },
    /// The direct solve was abandoned for the fallback.
    FellBack { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Residual bound; `None` means `1e-12` times the largest diagonal entry.
    pub tol: Option<f64>,
    pub leak_warning: f64,
    /// Preferred state to pin in the direct solve.
    pub pin: Option<usize>,
    pub method: SolveMethod,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: None,
            leak_warning: 1e-8,
            pin: None,
            method: SolveMethod::Direct,
            max_iterations: 500,
        }
    }
}

/// Normalised steady-state populations over a [`StateSpace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationVector {
    pub space: StateSpace,
    pub p: Vec<f64>,
    /// `|| R p ||_inf` with leaked flux returned to the pinned state.
    pub residual: f64,
    /// `sum_s p_s * leakage_s`.
    pub leaked_flux: f64,
    pub method: SolveMethod,
    pub pinned: Option<usize>,
    pub warnings: Vec<SolverWarning>,
}

impl PopulationVector {
    /// Leaked flux through the `J_max` rim and through the height caps.
    pub fn leak_split(&self, r: &RateMatrix) -> (f64, f64) {
        let lj = self.p.iter().zip(r.leakage_j()).map(|(p, l)| p * l).sum();
        let lh = self.p.iter().zip(r.leakage_h()).map(|(p, l)| p * l).sum();
        (lj, lh)
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.p)
    }

    /// A point mass on the given ordinal.
    pub fn delta(space: &StateSpace, ordinal: usize) -> Self {
        let mut p = vec![0.0; space.size()];
        p[ordinal] = 1.0;
        Self {
            space: space.clone(),
            p,
            residual: 0.0,
            leaked_flux: 0.0,
            method: SolveMethod::Direct,
            pinned: Some(ordinal),
            warnings: Vec::new(),
        }
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = k;
        }
    }
    best
}

/// Computes the stationary vector of `r` with the default options.
pub fn steady_state(r: &RateMatrix, tol: f64) -> Result<PopulationVector> {
    solve(
        r,
        &SolveOptions {
            tol: Some(tol),
            ..Default::default()
        },
    )
}

pub fn solve(r: &RateMatrix, opts: &SolveOptions) -> Result<PopulationVector> {
    let n = r.size();
    if n == 0 {
        return Err(Error::Domain("empty state space".into()));
    }
    let scale = r.scale();
    let tol = opts.tol.unwrap_or(1e-12 * scale.max(1.0));
    if n == 1 || scale == 0.0 {
        // nothing moves: a single state, or every state is absorbing
        if n == 1 {
            return Ok(PopulationVector::delta(r.space(), 0));
        }
        return Err(Error::DegenerateNullspace(n));
    }

    let absorbing: Vec<usize> = (0..n).filter(|&k| r.diag()[k] == 0.0).collect();
    if absorbing.len() > 1 {
        return Err(Error::DegenerateNullspace(absorbing.len()));
    }

    let mut warnings = Vec::new();
    let attempt = match opts.method {
        SolveMethod::Direct => {
            let first = absorbing.first().copied().or(opts.pin.filter(|&k| k < n));
            direct(r, first, tol)
        }
        SolveMethod::InverseIteration => Err(Error::SolverFailure {
            reason: "inverse iteration requested".into(),
            residual: f64::INFINITY,
        }),
    };

    let (p, residual, method, pinned) = match attempt {
        Ok((p, res, pin)) if res <= tol => (p, res, SolveMethod::Direct, Some(pin)),
        other => {
            if opts.method == SolveMethod::Direct {
                let reason = match &other {
                    Ok((_, res, _)) => format!("direct residual {res:e} above {tol:e}"),
                    Err(e) => e.to_string(),
                };
                warnings.push(SolverWarning::FellBack { reason });
            }
            match inverse_iteration(r, tol, opts.max_iterations) {
                Ok((p, res)) => (p, res, SolveMethod::InverseIteration, None),
                Err(e) => {
                    // keep whichever attempt got closer
                    if let Ok((p, res, pin)) = other {
                        if let Error::SolverFailure { residual, .. } = &e {
                            if res < *residual && res <= tol * 1e3 {
                                return finish(r, p, res, SolveMethod::Direct, Some(pin), warnings, opts);
                            }
                        }
                    }
                    return Err(e);
                }
            }
        }
    };
    finish(r, p, residual, method, pinned, warnings, opts)
}

fn finish(
    r: &RateMatrix,
    mut p: Vec<f64>,
    residual: f64,
    method: SolveMethod,
    pinned: Option<usize>,
    mut warnings: Vec<SolverWarning>,
    opts: &SolveOptions,
) -> Result<PopulationVector> {
    let mut clipped = 0usize;
    let mut most_negative = 0.0f64;
    for (k, v) in p.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -CLIP_THRESHOLD {
                return Err(Error::NegativePopulation {
                    ordinal: k,
                    value: *v,
                });
            }
            most_negative = most_negative.min(*v);
            clipped += 1;
            *v = 0.0;
        }
    }
    if clipped > 0 {
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        warnings.push(SolverWarning::Clipped {
            count: clipped,
            most_negative,
        });
    }
    let leaked_flux: f64 = (0..p.len()).map(|k| p[k] * r.leakage(k)).sum();
    if leaked_flux > opts.leak_warning {
        warnings.push(SolverWarning::LeakedFlux {
            flux: leaked_flux,
            threshold: opts.leak_warning,
        });
    }
    Ok(PopulationVector {
        space: r.space().clone(),
        p,
        residual,
        leaked_flux,
        method,
        pinned,
        warnings,
    })
}

/// Ordinal carrying the most weight after one step of shifted inverse
/// iteration, which already resolves where the stationary mass sits.
fn probe_pin(r: &RateMatrix) -> Option<usize> {
    let n = r.size();
    let sigma = 1e-9 * r.scale();
    let mut sky = shifted_system(r, sigma);
    sky.factorize(sigma * 1e-6).ok()?;
    let mut y = vec![-1.0 / n as f64; n];
    sky.solve_in_place(&mut y);
    y.iter().all(|v| v.is_finite()).then(|| argmax(&y))
}

/// Residual of `R p` with the leaked flux reinjected at `pin`.
fn closed_residual(r: &RateMatrix, p: &[f64], pin: Option<usize>) -> f64 {
    let mut rp = r.apply(p);
    if let Some(k) = pin {
        let leak: f64 = (0..p.len()).map(|j| p[j] * r.leakage(j)).sum();
        rp[k] += leak;
    }
    rp.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn pin_scale(r: &RateMatrix, pin: usize) -> f64 {
    r.diag()[pin].abs().max(r.scale() * 1e-3)
}

/// `R` with row `pin` replaced by `c e_pin^T`.
fn pinned_system(r: &RateMatrix, pin: usize) -> Skyline {
    let n = r.size();
    let mut entries = Vec::with_capacity(n + r.nnz_offdiag());
    for k in 0..n {
        let d = if k == pin { pin_scale(r, pin) } else { r.diag()[k] };
        entries.push((k, k, d));
        for (row, v) in r.column(k) {
            if row != pin {
                entries.push((row, k, v));
            }
        }
    }
    Skyline::from_entries(n, &entries)
}

/// Pinned direct solve at `pin`. Returns `None` when the result is not a
/// usable probability vector, which happens when the pin carries so little
/// weight that the reduced system is numerically singular.
fn direct_at(r: &RateMatrix, pin: usize, tol: f64) -> Option<(Vec<f64>, f64)> {
    let n = r.size();
    let mut sky = pinned_system(r, pin);
    sky.factorize(r.scale() * 1e-14).ok()?;
    let pin_scale = pin_scale(r, pin);
    let mut x = vec![0.0; n];
    x[pin] = pin_scale;
    sky.solve_in_place(&mut x);
    if !x.iter().all(|v| v.is_finite()) {
        return None;
    }
    let total: f64 = x.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    x.iter_mut().for_each(|v| *v /= total);
    if x.iter().any(|&v| v < -CLIP_THRESHOLD) {
        return None;
    }
    let mut res = closed_residual(r, &x, Some(pin));
    if res > tol {
        // one step of iterative refinement against the pinned system
        let mut d: Vec<f64> = r.apply(&x).iter().map(|v| -v).collect();
        d[pin] = 0.0;
        sky.solve_in_place(&mut d);
        let mut refined: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + b).collect();
        let t: f64 = refined.iter().sum();
        refined.iter_mut().for_each(|v| *v /= t);
        let rres = closed_residual(r, &refined, Some(pin));
        if rres < res {
            x = refined;
            res = rres;
        }
    }
    Some((x, res))
}

/// Tries the preferred pin, then the probed one, then re-pins at the most
/// populated state if the pin turned out to be weakly populated.
fn direct(r: &RateMatrix, preferred: Option<usize>, tol: f64) -> Result<(Vec<f64>, f64, usize)> {
    let mut tried = Vec::new();
    let mut candidates: Vec<usize> = preferred.into_iter().collect();
    let mut probed = false;
    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    let mut best_weak = true;
    while tried.len() < 4 {
        let pin = match candidates.pop() {
            Some(k) => k,
            None if !probed => {
                probed = true;
                match probe_pin(r) {
                    Some(k) => k,
                    None => break,
                }
            }
            None => break,
        };
        if tried.contains(&pin) {
            continue;
        }
        tried.push(pin);
        if let Some((x, res)) = direct_at(r, pin, tol) {
            let top = argmax(&x);
            let weak = x[pin] < 1e-6 * x[top];
            // a well-populated pin beats a smaller residual
            if best.as_ref().map_or(true, |b| (weak, res) < (best_weak, b.1)) {
                best = Some((x, res, pin));
                best_weak = weak;
            }
            if !weak && res <= tol {
                break;
            }
            if weak {
                candidates.push(top);
            }
        }
    }
    best.ok_or_else(|| Error::SolverFailure {
        reason: format!("pinned solve unusable for pins {tried:?}"),
        residual: f64::INFINITY,
    })
}

fn shifted_system(r: &RateMatrix, sigma: f64) -> Skyline {
    let n = r.size();
    let mut entries = Vec::with_capacity(n + r.nnz_offdiag());
    for k in 0..n {
        entries.push((k, k, r.diag()[k] - sigma));
        for (row, v) in r.column(k) {
            entries.push((row, k, v));
        }
    }
    Skyline::from_entries(n, &entries)
}

/// Inverse iteration with shift `sigma = 1e-9 * scale`.
pub(crate) fn inverse_iteration(r: &RateMatrix, tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    let n = r.size();
    let scale = r.scale();
    let sigma = 1e-9 * scale;
    let mut sky = shifted_system(r, sigma);
    sky.factorize(sigma * 1e-6).map_err(|z| Error::SolverFailure {
        reason: format!("shifted factorisation hit pivot {:e} at {}", z.value, z.index),
        residual: f64::INFINITY,
    })?;
    let mut x = vec![1.0 / n as f64; n];
    let mut best = (x.clone(), f64::INFINITY);
    for _ in 0..max_iter {
        let mut y: Vec<f64> = x.iter().map(|v| -v).collect();
        sky.solve_in_place(&mut y);
        let total: f64 = y.iter().sum();
        if !(total.is_finite() && total != 0.0) {
            break;
        }
        y.iter_mut().for_each(|v| *v /= total);
        let change: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        // a leaky generator has no exact null vector; judge the closed residual
        let res = closed_residual(r, &x, Some(argmax(&x)));
        if res < best.1 {
            best = (x.clone(), res);
        }
        if change < 1e-15 || res <= tol * 1e-3 {
            break;
        }
    }
    let res = best.1;
    if res <= tol {
        Ok((best.0, res))
    } else {
        Err(Error::SolverFailure {
            reason: format!("inverse iteration did not reach {tol:e}"),
            residual: res,
        })
    }
}
