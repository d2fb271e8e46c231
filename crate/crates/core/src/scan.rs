//! Sweeps in the repump rate, minimum search and power-law fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulant::{analytic_leading, cumulant_steady, meanfield_steady, observables_from_cumulants, Order};
use crate::dicke::StateSpace;
use crate::ed::{solve_ed, solve_ed_on, TruncationPolicy};
use crate::error::{Error, Result};
use crate::inhomogeneous::{inhom_observables, inhom_steady, InhomSpec};
use crate::observables::ObservablesRecord;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ed,
    Cumulant2,
    Cumulant3,
    Meanfield,
    Analytic,
    Inhom,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ed => "ed",
            Method::Cumulant2 => "cumulant2",
            Method::Cumulant3 => "cumulant3",
            Method::Meanfield => "meanfield",
            Method::Analytic => "analytic",
            Method::Inhom => "inhom",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ed" => Method::Ed,
            "cumulant2" => Method::Cumulant2,
            "cumulant3" => Method::Cumulant3,
            "meanfield" => Method::Meanfield,
            "analytic" => Method::Analytic,
            "inhom" => Method::Inhom,
            _ => return Err(Error::Config(format!("unknown method '{s}'"))),
        })
    }
}

/// A method with the settings it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluator {
    pub method: Method,
    /// For ED; `None` picks [`TruncationPolicy::default_for`].
    pub truncation: Option<TruncationPolicy>,
    /// Required for [`Method::Inhom`].
    pub inhom: Option<InhomSpec>,
    /// When set, every point uses `1/T2 = alpha w`.
    pub alpha: Option<f64>,
}

impl Evaluator {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            truncation: None,
            inhom: None,
            alpha: None,
        }
    }

    pub fn ed(truncation: TruncationPolicy) -> Self {
        Self {
            method: Method::Ed,
            truncation: Some(truncation),
            inhom: None,
            alpha: None,
        }
    }

    pub fn inhom(spec: InhomSpec) -> Self {
        Self {
            method: Method::Inhom,
            truncation: None,
            inhom: Some(spec),
            alpha: None,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    /// Parameters at repump `w`.
    pub fn at(&self, p: &ModelParams, w: f64) -> ModelParams {
        match self.alpha {
            Some(a) => p.w(w).alpha(a),
            None => p.w(w),
        }
    }

    fn policy(&self, n_atoms: u32) -> TruncationPolicy {
        self.truncation.unwrap_or_else(|| TruncationPolicy::default_for(n_atoms))
    }

    /// Observables at one parameter point. Fields a method does not
    /// provide are NaN.
    pub fn evaluate(&self, p: &ModelParams) -> Result<ObservablesRecord> {
        self.evaluate_on(p, None)
    }

    fn evaluate_on(&self, p: &ModelParams, space: Option<&StateSpace>) -> Result<ObservablesRecord> {
        p.validate()?;
        let n = p.n_atoms;
        let nf = f64::from(n);
        match self.method {
            Method::Ed => match space {
                Some(s) => Ok(solve_ed_on(p, s)?.observables),
                None => Ok(solve_ed(p, &self.policy(n))?.observables),
            },
            Method::Cumulant2 => Ok(observables_from_cumulants(&cumulant_steady(p, Order::Second)?, n)),
            Method::Cumulant3 => Ok(observables_from_cumulants(&cumulant_steady(p, Order::Third)?, n)),
            Method::Meanfield => Ok(observables_from_cumulants(&meanfield_steady(p).state, n)),
            Method::Analytic => {
                let a = analytic_leading(p)?;
                Ok(partial_record(n, nf * a.sz0 / 2.0, a.jpjm0, a.sf, a.xi2_1, a.sz0, a.spm1))
            }
            Method::Inhom => {
                let spec = self
                    .inhom
                    .as_ref()
                    .ok_or_else(|| Error::Config("the inhom method needs a bin configuration".into()))?;
                let cfg = spec.resolve(n)?;
                let o = inhom_observables(&inhom_steady(&cfg, p)?, &cfg, p);
                let jpjm = o.power / p.gamma_c;
                Ok(partial_record(n, o.jz_mean, jpjm, o.sf, f64::NAN, 2.0 * o.jz_mean / nf, f64::NAN))
            }
        }
    }
}

fn partial_record(n_atoms: u32, jz_mean: f64, jpjm: f64, sf: f64, xi2: f64, sigz: f64, spm: f64) -> ObservablesRecord {
    ObservablesRecord {
        n_atoms,
        jz_mean,
        jz_var: f64::NAN,
        jpjm,
        jp2jm2: None,
        j2_mean: f64::NAN,
        sf,
        xi2,
        g2: None,
        sigz_mean: sigz,
        spm_corr: spm,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub method: Method,
    pub params: ModelParams,
    pub grid: Vec<f64>,
    pub records: Vec<ObservablesRecord>,
}

impl SweepResult {
    /// Record with the smallest value of `key`, ignoring NaN.
    pub fn argmin_by(&self, key: impl Fn(&ObservablesRecord) -> f64) -> Option<(f64, ObservablesRecord)> {
        self.grid
            .iter()
            .zip(&self.records)
            .filter(|(_, r)| !key(r).is_nan())
            .min_by(|a, b| key(a.1).total_cmp(&key(b.1)))
            .map(|(w, r)| (*w, *r))
    }
}

/// `points` values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => (0..points)
            .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates every grid point in parallel; results are in grid order and
/// each carries its own outcome.
pub fn sweep_points(p: &ModelParams, grid: &[f64], ev: &Evaluator) -> Vec<Result<ObservablesRecord>> {
    let shared = match (ev.method, ev.policy(p.n_atoms)) {
        (Method::Ed, TruncationPolicy::Full) => Some(StateSpace::full(p.n_atoms)),
        (Method::Ed, TruncationPolicy::Fixed { two_j_max }) => Some(StateSpace::truncated(p.n_atoms, Some(two_j_max))),
        _ => None,
    };
    grid.par_iter()
        .map(|&w| {
            ev.evaluate_on(&ev.at(p, w), shared.as_ref())
                .map_err(|e| Error::AtPoint { w, source: Box::new(e) })
        })
        .collect()
}

pub fn sweep_w(p: &ModelParams, grid: &[f64], ev: &Evaluator) -> Result<SweepResult> {
    check_grid(grid)?;
    let records = sweep_points(p, grid, ev).into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        method: ev.method,
        params: *p,
        grid: grid.to_vec(),
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Minimum {
    pub w_star: f64,
    pub value: f64,
    /// The minimum sits on a jump of the function rather than at a smooth
    /// interior point.
    pub at_jump: bool,
}

/// Minimizes `f` on `[lo, hi]`: a coarse grid of `coarse` points locates
/// the best cell, golden-section search refines it to relative tolerance
/// `tol` in the argument. The coarse grid is evaluated in parallel.
pub fn minimize_scalar(
    f: impl Fn(f64) -> Result<f64> + Sync,
    lo: f64,
    hi: f64,
    coarse: usize,
    tol: f64,
) -> Result<Minimum> {
    let grid = linspace(lo, hi, coarse.max(3));
    let vals = grid.par_iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let (i, _) = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(Error::Bracketing { lo, hi })?;
    if i == 0 || i == grid.len() - 1 {
        return Err(Error::Bracketing { lo, hi });
    }
    let spread = vals.iter().filter(|v| !v.is_nan()).fold(0.0f64, |m, v| m.max((v - vals[i]).abs()));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (grid[i - 1], grid[i + 1]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let scale = hi.abs().max(lo.abs());
    while (b - a) > tol * scale {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let (w_star, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    let (value, w_star) = if vals[i] < value { (vals[i], grid[i]) } else { (value, w_star) };
    let (left, right) = rayon::join(|| f(w_star - tol * scale), || f(w_star + tol * scale));
    let (left, right) = (left?, right?);
    Ok(Minimum {
        w_star,
        value,
        at_jump: (left - right).abs() > 0.1 * spread,
    })
}

/// Minimum of the squeezing parameter over `w` in `bracket`
/// (default `[0.8, 1.2] gamma`).
pub fn find_min_xi2(p: &ModelParams, ev: &Evaluator, bracket: Option<(f64, f64)>, tol: f64) -> Result<Minimum> {
    let (lo, hi) = bracket.unwrap_or((0.8 * p.gamma, 1.2 * p.gamma));
    minimize_scalar(|w| Ok(ev.evaluate(&ev.at(p, w))?.xi2), lo, hi, 21, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS deviation in `ln y`.
    pub residual: f64,
    pub points: usize,
}

/// Least squares of `ln y = ln a + b ln N`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::Domain(format!("power-law fit needs positive data, got ({x}, {y})")));
    }
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("power-law fit needs distinct abscissae".into()));
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    Ok(PowerLawFit {
        exponent: b,
        prefactor: a.exp(),
        residual: (rss / k).sqrt(),
        points: points.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0].iter().map(|&n: &f64| (n, 7.0 * n.powf(-0.34))).collect();
        let f = fit_power_law(&pts).unwrap();
        assert_abs_diff_eq!(f.exponent, -0.34, epsilon = 1e-12);
        assert_abs_diff_eq!(f.prefactor, 7.0, epsilon = 1e-10);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn quadratic_minimum() {
        let m = minimize_scalar(|x| Ok((x - 0.731).powi(2) + 2.0), 0.0, 2.0, 11, 1e-6).unwrap();
        assert_abs_diff_eq!(m.w_star, 0.731, epsilon = 2e-6);
        assert_abs_diff_eq!(m.value, 2.0, epsilon = 1e-11);
        assert!(!m.at_jump);
    }

    #[test]
    fn monotone_function_has_no_bracket() {
        assert!(matches!(
            minimize_scalar(|x| Ok(x), 0.0, 1.0, 11, 1e-6),
            Err(Error::Bracketing { .. })
        ));
    }

    #[test]
    fn analytic_minimum_is_the_jump() {
        let p = ModelParams::new(1000, 0.1, 0.1);
        let m = find_min_xi2(&p, &Evaluator::new(Method::Analytic), None, 1e-6).unwrap();
        assert!(m.at_jump);
        assert_abs_diff_eq!(m.w_star, 0.1, epsilon = 1e-6);
        assert!(m.value < 1e-5);
    }

    #[test]
    fn analytic_output_vanishes_below_threshold() {
        let p = ModelParams::new(1000, 0.1, 0.1);
        let s = sweep_w(&p, &linspace(0.05, 0.15, 11), &Evaluator::new(Method::Analytic)).unwrap();
        for (w, r) in s.grid.iter().zip(&s.records) {
            if *w < 0.1 {
                assert_eq!(r.jpjm, 0.0);
            } else {
                assert!(r.jpjm > 0.0 || *w == 0.1);
            }
        }
    }

    #[test]
    fn single_point_sweep_matches_direct_evaluation() {
        let p = ModelParams::new(60, 0.1, 0.1);
        for ev in [Evaluator::new(Method::Ed), Evaluator::new(Method::Cumulant3), Evaluator::new(Method::Meanfield)] {
            let s = sweep_w(&p, &[0.12], &ev).unwrap();
            assert_eq!(s.records[0], ev.evaluate(&p.w(0.12)).unwrap());
        }
    }

    #[test]
    fn sweep_is_thread_count_independent() {
        let p = ModelParams::new(80, 0.1, 0.1).t2_inv(0.01);
        let grid = linspace(0.05, 0.2, 9);
        let ev = Evaluator::new(Method::Ed);
        let run = |k| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .unwrap()
                .install(|| sweep_w(&p, &grid, &ev).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn errors_name_the_failing_point() {
        let p = ModelParams::new(100, 0.1, 0.1);
        let r = sweep_w(&p, &[0.05, 2.0], &Evaluator::new(Method::Analytic));
        assert!(matches!(r, Err(Error::AtPoint { w, .. }) if w == 2.0));
    }

    #[test]
    fn grid_must_increase() {
        let p = ModelParams::new(10, 0.1, 0.1);
        assert!(sweep_w(&p, &[0.2, 0.1], &Evaluator::new(Method::Analytic)).is_err());
    }
}
