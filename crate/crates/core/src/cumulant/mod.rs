//! Cumulant hierarchies for the homogeneous ensemble.
//!
//! Moments are per atom: `sz = <s1z>`, `spm = <s1+ s2->`, `szz = <s1z s2z>`
//! and, at third order, `spmz = <s1+ s2- s3z>` and `szzz = <s1z s2z s3z>`.

mod analytic;

pub use analytic::{analytic_leading, AnalyticRecord, Regime};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::ObservablesRecord;
use crate::ode::{integrate_to_steady, SteadyOptions};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    MeanField,
    Second,
    Third,
}

/// One-, two- and three-atom moments. Below third order `spmz` and `szzz`
/// hold the factorized values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantState {
    pub order: Order,
    pub sz: f64,
    pub spm: f64,
    pub szz: f64,
    pub spmz: f64,
    pub szzz: f64,
}

impl CumulantState {
    /// Every atom in the ground state.
    pub fn all_down(order: Order) -> Self {
        Self {
            order,
            sz: -1.0,
            spm: 0.0,
            szz: 1.0,
            spmz: 0.0,
            szzz: -1.0,
        }
    }

    fn from_slice(order: Order, x: &[f64]) -> Self {
        let (sz, spm, szz) = (x[0], x[1], x[2]);
        let (spmz, szzz) = match order {
            Order::Third => (x[3], x[4]),
            _ => (spm * sz, 3.0 * sz * szz - 2.0 * sz.powi(3)),
        };
        Self {
            order,
            sz,
            spm,
            szz,
            spmz,
            szzz,
        }
    }

    fn to_vec(self) -> Vec<f64> {
        match self.order {
            Order::Third => vec![self.sz, self.spm, self.szz, self.spmz, self.szzz],
            _ => vec![self.sz, self.spm, self.szz],
        }
    }
}

/// Unpolarized and polarized mean-field fixed points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    /// `(sz, |<s+>|^2)` with no polarization.
    pub unpolarized: (f64, f64),
    /// The polarized root; `None` for a single atom.
    pub polarized: Option<(f64, f64)>,
    /// True when the polarized root is physical.
    pub polarized_selected: bool,
    pub state: CumulantState,
}

pub fn meanfield_steady(p: &ModelParams) -> MeanFieldSolution {
    let (gp, gm) = p.derived_gammas();
    let unpolarized = (if gp > 0.0 { gm / gp } else { -1.0 }, 0.0);
    let n1 = f64::from(p.n_atoms) - 1.0;
    let polarized = if n1 > 0.0 && p.gamma_c > 0.0 {
        let c = n1 * p.gamma_c;
        Some((gp / c, gm / (2.0 * c) - gp * gp / (2.0 * c * c)))
    } else {
        None
    };
    let polarized_selected = polarized.is_some_and(|(_, s2)| s2 > 0.0);
    let (sz, s2) = if polarized_selected {
        polarized.unwrap()
    } else {
        unpolarized
    };
    // a product state: <s1+ s2-> = |<s+>|^2
    let state = CumulantState {
        order: Order::MeanField,
        sz,
        spm: s2,
        szz: sz * sz,
        spmz: s2 * sz,
        szzz: sz.powi(3),
    };
    MeanFieldSolution {
        unpolarized,
        polarized,
        polarized_selected,
        state,
    }
}

fn rhs2(p: &ModelParams, x: &[f64], spmz: f64, d: &mut [f64]) {
    let (gp, gm) = p.derived_gammas();
    let n = f64::from(p.n_atoms);
    let gc = p.gamma_c;
    let (sz, spm, szz) = (x[0], x[1], x[2]);
    d[0] = -gp * sz + gm - 2.0 * (n - 1.0) * gc * spm;
    d[1] = -(gp + 4.0 * p.t2_inv) * spm + 0.5 * gc * (sz + szz) + (n - 2.0) * gc * spmz;
    d[2] = -2.0 * gp * szz + 2.0 * gm * sz + 4.0 * gc * spm - 4.0 * (n - 2.0) * gc * spmz;
}

fn rhs3(p: &ModelParams, x: &[f64], d: &mut [f64]) {
    let (gp, gm) = p.derived_gammas();
    let n = f64::from(p.n_atoms);
    let gc = p.gamma_c;
    let (sz, spm, szz, spmz, szzz) = (x[0], x[1], x[2], x[3], x[4]);
    rhs2(p, x, spmz, d);
    let pmzz = spm * szz + 2.0 * spmz * sz - 2.0 * spm * sz * sz;
    let pmpm = 2.0 * spm * spm;
    d[3] = -(2.0 * (gp + gc) + 4.0 * p.t2_inv) * spmz
        + (gm - gc) * spm
        + 0.5 * gc * (szz + szzz)
        + (n - 3.0) * gc * pmzz
        - 2.0 * (n - 3.0) * gc * pmpm;
    d[4] = -3.0 * gp * szzz + 3.0 * gm * szz + 12.0 * gc * spmz - 6.0 * (n - 3.0) * gc * pmzz;
}

/// Time derivatives of `(sz, spm, szz)` with `spmz ~ spm sz`.
pub fn cumulant2_rhs(s: &CumulantState, p: &ModelParams) -> [f64; 3] {
    let mut d = [0.0; 3];
    rhs2(p, &[s.sz, s.spm, s.szz], s.spm * s.sz, &mut d);
    d
}

/// Time derivatives of `(sz, spm, szz, spmz, szzz)` with the four-atom
/// moments factorized.
pub fn cumulant3_rhs(s: &CumulantState, p: &ModelParams) -> [f64; 5] {
    let mut d = [0.0; 5];
    rhs3(p, &[s.sz, s.spm, s.szz, s.spmz, s.szzz], &mut d);
    d
}

/// Steady state of the second- or third-order hierarchy, reached from the
/// all-down state.
pub fn cumulant_steady(p: &ModelParams, order: Order) -> Result<CumulantState> {
    cumulant_steady_with(p, order, &default_options(p))
}

pub(crate) fn default_options(p: &ModelParams) -> SteadyOptions {
    SteadyOptions {
        t_max: 1e5 / p.gamma_c.max(f64::MIN_POSITIVE),
        ..Default::default()
    }
}

pub fn cumulant_steady_with(p: &ModelParams, order: Order, opts: &SteadyOptions) -> Result<CumulantState> {
    p.validate()?;
    let x0 = CumulantState::all_down(order).to_vec();
    let report = match order {
        Order::Second => integrate_to_steady(|x: &[f64], d: &mut [f64]| rhs2(p, x, x[1] * x[0], d), &x0, opts)?,
        Order::Third => integrate_to_steady(|x: &[f64], d: &mut [f64]| rhs3(p, x, d), &x0, opts)?,
        Order::MeanField => {
            return Err(Error::Domain("use meanfield_steady for the mean-field order".into()));
        }
    };
    Ok(CumulantState::from_slice(order, &report.x))
}

/// Collective observables from the per-atom moments.
pub fn observables_from_cumulants(s: &CumulantState, n_atoms: u32) -> ObservablesRecord {
    let n = f64::from(n_atoms);
    let jz = n * s.sz / 2.0;
    let jpjm = n * (n - 1.0) * s.spm + n * (1.0 + s.sz) / 2.0;
    let jz_var = n / 4.0 * (1.0 - s.sz * s.sz) + n * (n - 1.0) / 4.0 * (s.szz - s.sz * s.sz);
    let xi2 = 1.5 + 2.0 * (n - 1.0) * s.spm + (n - 1.0) / 2.0 * s.szz - n / 2.0 * s.sz * s.sz;
    ObservablesRecord {
        n_atoms,
        jz_mean: jz,
        jz_var,
        jpjm,
        jp2jm2: None,
        j2_mean: xi2 * n / 2.0 + jz * jz,
        sf: (jpjm - n / 2.0 - jz) / n,
        xi2,
        g2: None,
        sigz_mean: s.sz,
        spm_corr: s.spm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{oracle_moments, oracle_observables, oracle_steady};
    use approx::assert_abs_diff_eq;

    fn state(order: Order, v: [f64; 5]) -> CumulantState {
        CumulantState {
            order,
            sz: v[0],
            spm: v[1],
            szz: v[2],
            spmz: v[3],
            szzz: v[4],
        }
    }

    #[test]
    fn second_order_is_exact_for_two_atoms() {
        for (w, t2) in [(0.05, 0.0), (0.3, 0.0), (1.7, 0.0), (0.2, 0.1), (0.9, 1.3)] {
            let p = ModelParams::new(2, 0.1, w).t2_inv(t2);
            let s = cumulant_steady(&p, Order::Second).unwrap();
            let m = oracle_moments(&oracle_steady(&p).unwrap());
            assert_abs_diff_eq!(s.sz, m.sz, epsilon = 1e-10);
            assert_abs_diff_eq!(s.spm, m.spm, epsilon = 1e-10);
            assert_abs_diff_eq!(s.szz, m.szz, epsilon = 1e-10);
        }
    }

    #[test]
    fn third_order_is_exact_for_three_atoms() {
        for (w, t2) in [(0.05, 0.0), (0.4, 0.0), (2.5, 0.0), (0.3, 0.3), (1.1, 2.0)] {
            let p = ModelParams::new(3, 0.1, w).t2_inv(t2);
            let s = cumulant_steady(&p, Order::Third).unwrap();
            let m = oracle_moments(&oracle_steady(&p).unwrap());
            for (a, b) in [(s.sz, m.sz), (s.spm, m.spm), (s.szz, m.szz), (s.spmz, m.spmz), (s.szzz, m.szzz)] {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn reconstruction_matches_operator_expectations() {
        let p = ModelParams::new(4, 0.2, 0.35).t2_inv(0.1);
        let rho = oracle_steady(&p).unwrap();
        let m = oracle_moments(&rho);
        let s = state(Order::Third, [m.sz, m.spm, m.szz, m.spmz, m.szzz]);
        let a = observables_from_cumulants(&s, 4);
        let b = oracle_observables(&rho);
        for (x, y) in [
            (a.jz_mean, b.jz_mean),
            (a.jz_var, b.jz_var),
            (a.jpjm, b.jpjm),
            (a.sf, b.sf),
            (a.xi2, b.xi2),
            (a.j2_mean, b.j2_mean),
        ] {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn rhs_matches_finite_difference_of_integrator() {
        let p = ModelParams::new(50, 0.1, 0.13).t2_inv(0.02);
        let s = state(Order::Third, [-0.3, -0.004, 0.1, 0.001, -0.03]);
        let d = cumulant3_rhs(&s, &p);
        let dt = 1e-7;
        let mut x = s.to_vec();
        let mut ig = crate::ode::Dopri::new(|x: &[f64], d: &mut [f64]| rhs3(&p, x, d), 5, 1e-13, 1e-16);
        ig.integrate(&mut x, dt);
        for i in 0..5 {
            let fd = (x[i] - s.to_vec()[i]) / dt;
            assert_abs_diff_eq!(fd, d[i], epsilon = 1e-4 * d[i].abs().max(1e-3));
        }
        let d2 = cumulant2_rhs(&s, &p);
        let mut y = vec![s.sz, s.spm, s.szz];
        let mut ig = crate::ode::Dopri::new(|x: &[f64], d: &mut [f64]| rhs2(&p, x, x[0] * x[1], d), 3, 1e-13, 1e-16);
        ig.integrate(&mut y, dt);
        for i in 0..3 {
            assert_abs_diff_eq!((y[i] - [s.sz, s.spm, s.szz][i]) / dt, d2[i], epsilon = 1e-4 * d2[i].abs().max(1e-3));
        }
    }

    #[test]
    fn no_dynamics_without_rates() {
        let p = ModelParams::new(100, 0.0, 0.0).gamma_c(0.0);
        let s = state(Order::Third, [0.2, -0.01, 0.3, 0.02, -0.1]);
        assert_eq!(cumulant3_rhs(&s, &p), [0.0; 5]);
    }

    #[test]
    fn two_atom_coupling_terms_vanish() {
        let p = ModelParams::new(2, 0.1, 0.4);
        let mut a = state(Order::Second, [0.1, 0.02, 0.3, 0.0, 0.0]);
        let d0 = cumulant2_rhs(&a, &p);
        a.spmz = 5.0;
        assert_eq!(cumulant2_rhs(&a, &p), d0);
    }

    #[test]
    fn dark_state_without_pump() {
        let p = ModelParams::new(1000, 0.1, 0.0);
        for order in [Order::Second, Order::Third] {
            let s = cumulant_steady(&p, order).unwrap();
            assert_abs_diff_eq!(s.sz, -1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.spm, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.szz, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn all_down_observables() {
        let o = observables_from_cumulants(&CumulantState::all_down(Order::Second), 37);
        assert_eq!(o.jpjm, 0.0);
        assert_eq!(o.jz_var, 0.0);
        assert_abs_diff_eq!(o.xi2, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn meanfield_branches() {
        let below = meanfield_steady(&ModelParams::new(10_000, 0.1, 0.5));
        assert!(!below.polarized_selected);
        assert_abs_diff_eq!(below.state.sz, (0.5 - 1.1) / (0.5 + 1.1), epsilon = 1e-15);
        assert_eq!(below.state.spm, 0.0);

        // fixed point of the two mean-field equations by direct iteration
        let p = ModelParams::new(10_000, 0.1, 2.2);
        let mf = meanfield_steady(&p);
        assert!(mf.polarized_selected);
        let (gp, gm) = p.derived_gammas();
        let n1 = 9999.0;
        let (mut sp, mut sz) = (0.1f64, 0.0f64);
        let dt = 1e-4;
        for _ in 0..2_000_000 {
            let dsp = -gp / 2.0 * sp + n1 * p.gamma_c / 2.0 * sp * sz;
            let dsz = -gp * sz + gm - 2.0 * n1 * p.gamma_c * sp * sp;
            sp += dt * dsp;
            sz += dt * dsz;
        }
        assert_abs_diff_eq!(sp * sp, mf.state.spm, epsilon = 1e-9);
        assert_abs_diff_eq!(sz, mf.state.sz, epsilon = 1e-9);
    }

    #[test]
    fn meanfield_threshold_is_continuous() {
        let p = ModelParams::new(10_000, 0.1, 1.1);
        let mf = meanfield_steady(&p);
        assert_eq!(mf.unpolarized.1, 0.0);
        assert!(mf.polarized.unwrap().1 <= 0.0);
        assert!(!mf.polarized_selected);
        assert_eq!(mf.state.spm, 0.0);
    }

    #[test]
    fn steady_state_is_tolerance_independent() {
        let p = ModelParams::new(1000, 0.1, 0.12);
        let a = cumulant_steady(&p, Order::Third).unwrap();
        let mut o = default_options(&p);
        o.rtol /= 2.0;
        o.atol /= 2.0;
        let b = cumulant_steady_with(&p, Order::Third, &o).unwrap();
        for (x, y) in [(a.sz, b.sz), (a.spm, b.spm), (a.szz, b.szz), (a.spmz, b.spmz), (a.szzz, b.szzz)] {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }
}
