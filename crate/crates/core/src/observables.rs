//! Collective-spin observables from `(J, M)` populations.
//!
//! On `|J, M>` the relevant operators are diagonal:
//! `Jz -> M`, `J+J- -> (J+M)(J-M+1)`,
//! `J+J+J-J- -> (J+M)(J-M+1)(J+M-1)(J-M+2)` and `J^2 -> J(J+1)`.

use serde::{Deserialize, Serialize};

use crate::steady::PopulationVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservablesRecord {
    pub n_atoms: u32,
    pub jz_mean: f64,
    pub jz_var: f64,
    pub jpjm: f64,
    /// `<J+ J+ J- J->`; absent when only two-atom moments are known.
    pub jp2jm2: Option<f64>,
    pub j2_mean: f64,
    /// Subradiance factor `(<J+J-> - N (1 + sz)/2) / N`.
    pub sf: f64,
    /// Total collective-spin variance over `N/2`.
    pub xi2: f64,
    /// `<J+J+J-J-> / <J+J->^2`; absent for a dark state.
    pub g2: Option<f64>,
    /// `<sigma_1^z>`.
    pub sigz_mean: f64,
    /// `<sigma_1^+ sigma_2^->`.
    pub spm_corr: f64,
}

impl ObservablesRecord {
    /// Builds the derived fields from the basic moments.
    pub fn from_moments(n_atoms: u32, jz_mean: f64, jz2: f64, jpjm: f64, jp2jm2: Option<f64>, j2_mean: f64) -> Self {
        let n = f64::from(n_atoms);
        let jz_var = (jz2 - jz_mean * jz_mean).max(0.0);
        let sf = (jpjm - n / 2.0 - jz_mean) / n;
        // via J^2 = J+J- + Jz^2 - Jz, independent of the jpjm sum
        let spm_corr = if n_atoms > 1 {
            (j2_mean - jz2 - n / 2.0) / (n * (n - 1.0))
        } else {
            0.0
        };
        let g2 = jp2jm2.and_then(|num| if jpjm > 0.0 { Some(num / (jpjm * jpjm)) } else { None });
        Self {
            n_atoms,
            jz_mean,
            jz_var,
            jpjm,
            jp2jm2,
            j2_mean,
            sf,
            xi2: (j2_mean - jz_mean * jz_mean) / (n / 2.0),
            g2,
            sigz_mean: 2.0 * jz_mean / n,
            spm_corr,
        }
    }

    /// Output power per atom, `<J+J->/N`.
    pub fn jpjm_per_atom(&self) -> f64 {
        self.jpjm / f64::from(self.n_atoms)
    }

    pub fn jz_var_per_atom(&self) -> f64 {
        self.jz_var / f64::from(self.n_atoms)
    }

    /// The `g2` numerator and denominator.
    pub fn g2_parts(&self) -> (Option<f64>, f64) {
        (self.jp2jm2, self.jpjm * self.jpjm)
    }
}

pub fn compute_observables(pv: &PopulationVector) -> ObservablesRecord {
    let n_atoms = pv.space.n_atoms();
    let (mut jz, mut jz2, mut jpjm, mut jp2, mut j2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (s, &p) in pv.space.iter().zip(&pv.p) {
        if p == 0.0 {
            continue;
        }
        let (j, m) = (s.j(), s.m());
        let a = (j + m) * (j - m + 1.0);
        let b = (j + m - 1.0) * (j - m + 2.0);
        jz += p * m;
        jz2 += p * m * m;
        jpjm += p * a;
        jp2 += p * a * b.max(0.0);
        j2 += p * j * (j + 1.0);
    }
    ObservablesRecord::from_moments(n_atoms, jz, jz2, jpjm, Some(jp2), j2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicke::{DickeIndex, StateSpace};
    use approx::assert_relative_eq;

    fn delta(n: u32, two_j: u32, two_m: i32) -> PopulationVector {
        let space = StateSpace::full(n);
        let k = space.index(&DickeIndex::new(two_j, two_m)).unwrap();
        PopulationVector::delta(&space, k)
    }

    #[test]
    fn singlet() {
        let o = compute_observables(&delta(10, 0, 0));
        assert_eq!(o.xi2, 0.0);
        assert_eq!(o.sf, -0.5);
        assert_eq!(o.jpjm, 0.0);
        assert_eq!(o.jz_mean, 0.0);
        assert_eq!(o.g2, None);
    }

    #[test]
    fn fully_excited() {
        for n in [2u32, 5, 10, 64] {
            let o = compute_observables(&delta(n, n, n as i32));
            let nf = f64::from(n);
            assert_eq!(o.jpjm, nf);
            assert_eq!(o.sf, 0.0);
            // <J+J+J-J-> on the top state is N * 2(N-1)
            assert_relative_eq!(o.g2.unwrap(), 2.0 * (nf - 1.0) / nf, max_relative = 1e-15);
        }
    }

    #[test]
    fn ground_state() {
        let o = compute_observables(&delta(12, 12, -12));
        assert_eq!(o.jpjm, 0.0);
        assert_eq!(o.jz_mean, -6.0);
        assert_eq!(o.jz_var, 0.0);
        assert_eq!(o.sigz_mean, -1.0);
        assert_eq!(o.xi2, 1.0);
    }

    #[test]
    fn two_forms_of_sf_agree() {
        let space = StateSpace::full(9);
        let mut p: Vec<f64> = (0..space.size()).map(|k| 1.0 + (k as f64 * 0.7).sin()).collect();
        let t: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= t);
        let mut pv = PopulationVector::delta(&space, 0);
        pv.p = p;
        let o = compute_observables(&pv);
        assert_relative_eq!(o.sf, 8.0 * o.spm_corr, max_relative = 1e-12);
        assert!(o.jz_var >= 0.0 && o.xi2 >= 0.0 && o.sf >= -0.5);
    }
}
