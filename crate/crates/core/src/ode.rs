//! Steady states of autonomous ODE systems: adaptive Dormand-Prince
//! integration towards the attractor followed by damped Newton polishing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Integration stops once `||f||_inf` falls below this.
    pub newton_switch: f64,
    /// Required final `||f||_inf`.
    pub tol: f64,
    pub t_max: f64,
    pub max_steps: usize,
    pub max_newton: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-13,
            newton_switch: 1e-7,
            tol: 1e-12,
            t_max: 1e5,
            max_steps: 20_000_000,
            max_newton: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyReport {
    pub x: Vec<f64>,
    /// `||f(x)||_inf` at the returned point.
    pub residual: f64,
    /// Integration time spent before polishing.
    pub time: f64,
    pub steps: usize,
    pub newton_iterations: usize,
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince integrator with first-same-as-last stages.
pub struct Dopri<F> {
    f: F,
    pub rtol: f64,
    pub atol: f64,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl<F: FnMut(&[f64], &mut [f64])> Dopri<F> {
    pub fn new(f: F, dim: usize, rtol: f64, atol: f64) -> Self {
        Self {
            f,
            rtol,
            atol,
            k: vec![vec![0.0; dim]; 7],
            tmp: vec![0.0; dim],
        }
    }

    /// Attempts one step of size `h` from `x` (with `k[0] = f(x)` already set).
    /// Returns the scaled error norm; on acceptance `x` is advanced.
    fn try_step(&mut self, x: &mut [f64], h: f64) -> f64 {
        let n = x.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (r, a) in A[s].iter().enumerate().take(s) {
                    acc += a * self.k[r][i];
                }
                self.tmp[i] = x[i] + h * acc;
            }
            (self.f)(&self.tmp, &mut self.k[s]);
        }
        // tmp now holds the 5th-order solution (stage 7 evaluation point)
        let mut err = 0.0f64;
        for i in 0..n {
            let mut e = 0.0;
            for s in 0..7 {
                e += (B5[s] - B4[s]) * self.k[s][i];
            }
            let sc = self.atol + self.rtol * x[i].abs().max(self.tmp[i].abs());
            err = err.max((h * e).abs() / sc);
        }
        if err <= 1.0 {
            x.copy_from_slice(&self.tmp);
            let last = self.k[6].clone();
            self.k[0].copy_from_slice(&last);
        }
        err
    }

    /// Integrates from `t = 0` to `t_end`.
    pub fn integrate(&mut self, x: &mut [f64], t_end: f64) -> usize {
        let mut t = 0.0;
        (self.f)(x, &mut self.k[0]);
        let mut h = initial_step(x, &self.k[0], self.rtol, self.atol).min(t_end);
        let mut steps = 0;
        while t < t_end {
            let h_now = h.min(t_end - t);
            let err = self.try_step(x, h_now);
            if err <= 1.0 {
                t += h_now;
                steps += 1;
            }
            h = h_now * step_factor(err);
        }
        steps
    }
}

fn initial_step(x: &[f64], f0: &[f64], rtol: f64, atol: f64) -> f64 {
    let mut d = 0.0f64;
    for (xi, fi) in x.iter().zip(f0) {
        d = d.max(fi.abs() / (atol + rtol * xi.abs()));
    }
    if d > 0.0 {
        (0.01 / d).min(1.0)
    } else {
        1.0
    }
}

fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    }
}

/// Central-difference Jacobian.
pub fn jacobian<F: FnMut(&[f64], &mut [f64])>(f: &mut F, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1e-3);
        xp[j] = x[j] + h;
        f(&xp, &mut fp);
        xp[j] = x[j] - h;
        f(&xp, &mut fm);
        xp[j] = x[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Damped Newton iteration on `f(x) = 0`. Each step is halved until the
/// residual decreases.
pub fn newton<F: FnMut(&[f64], &mut [f64])>(
    f: &mut F,
    x: &mut Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> (f64, usize) {
    let n = x.len();
    let mut fx = vec![0.0; n];
    f(x, &mut fx);
    let mut res = norm_inf(&fx);
    let mut iters = 0;
    let mut trial = vec![0.0; n];
    let mut ft = vec![0.0; n];
    while res > tol && iters < max_iter {
        iters += 1;
        let jac = jacobian(f, x);
        let rhs = DVector::from_iterator(n, fx.iter().map(|v| -v));
        let Some(dx) = jac.lu().solve(&rhs) else {
            break;
        };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            for i in 0..n {
                trial[i] = x[i] + lambda * dx[i];
            }
            f(&trial, &mut ft);
            let r = norm_inf(&ft);
            if r.is_finite() && r < res {
                x.copy_from_slice(&trial);
                fx.copy_from_slice(&ft);
                res = r;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (res, iters)
}

/// Integrates from `x0` until `||f||` is below `newton_switch`, then polishes
/// with Newton to `tol`.
pub fn integrate_to_steady<F: FnMut(&[f64], &mut [f64])>(
    mut f: F,
    x0: &[f64],
    opts: &SteadyOptions,
) -> Result<SteadyReport> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = vec![0.0; n];
    f(&x, &mut fx);
    let mut res = norm_inf(&fx);
    let mut t = 0.0;
    let mut steps = 0usize;
    if res > opts.newton_switch {
        let mut ig = Dopri::new(&mut f, n, opts.rtol, opts.atol);
        (ig.f)(&x, &mut ig.k[0]);
        let mut h = initial_step(&x, &ig.k[0], opts.rtol, opts.atol);
        loop {
            let err = ig.try_step(&mut x, h);
            if err <= 1.0 {
                t += h;
                steps += 1;
                res = norm_inf(&ig.k[0]);
                if res <= opts.newton_switch {
                    break;
                }
            }
            if !err.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverFailure {
                    reason: format!("integration diverged at t = {t:e}"),
                    residual: f64::INFINITY,
                });
            }
            if t >= opts.t_max || steps >= opts.max_steps {
                break;
            }
            h = (h * step_factor(err)).min(opts.t_max - t).max(1e-300);
        }
    }
    let before = x.clone();
    let (polished, iters) = newton(&mut f, &mut x, opts.tol, opts.max_newton);
    if polished <= opts.tol {
        // a polish that lands far from the trajectory has jumped branches
        let jump = x.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if res <= opts.newton_switch || jump < 1e-3 {
            return Ok(SteadyReport {
                x,
                residual: polished,
                time: t,
                steps,
                newton_iterations: iters,
            });
        }
    }
    Err(Error::SolverFailure {
        reason: format!(
            "no steady state: integrated to t = {t:e} in {steps} steps, Newton residual {polished:e}"
        ),
        residual: polished.min(res),
    })
}
