//! Closed-form transition rates between `(J, M)` populations and the sparse
//! generator assembled from them.
//!
//! Each single-atom channel summed over all atoms moves population between
//! neighbouring ladders (`|dJ| <= 1`). Collective emission stays on its
//! ladder. Branches whose closed form is `0/0` at `J = 0` carry no
//! population and are omitted, as is the population-neutral dephasing
//! self-transition.
//!
//! Dephasing rates correspond to the jump operator `sigma_z / sqrt(T2)` on
//! each atom, i.e. four times the bare coefficient that appears for the
//! `sigma_z / 2` normalisation.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dicke::{DickeIndex, StateSpace};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    CollectiveDecay,
    Repump,
    IndividualDecay,
    Dephasing,
}

impl Channel {
    /// Change of `2M` caused by the channel.
    pub fn delta_two_m(self) -> i32 {
        match self {
            Channel::CollectiveDecay | Channel::IndividualDecay => -2,
            Channel::Repump => 2,
            Channel::Dephasing => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: DickeIndex,
    pub to: DickeIndex,
    pub rate: f64,
    pub channel: Channel,
}

/// All non-zero outgoing transitions of `s` (which must be valid for `p.n_atoms`).
pub fn channel_rates(p: &ModelParams, s: DickeIndex) -> Vec<Transition> {
    let n = f64::from(p.n_atoms);
    let j = s.j();
    let m = s.m();
    let mut out = Vec::with_capacity(9);
    let mut push = |dj: i32, channel: Channel, rate: f64| {
        if rate > 0.0 {
            let to = DickeIndex::new(
                (s.two_j as i32 + 2 * dj) as u32,
                s.two_m + channel.delta_two_m(),
            );
            out.push(Transition {
                from: s,
                to,
                rate,
                channel,
            });
        }
    };

    // Same-ladder and lower-ladder branches have J in the denominator.
    let has_lower = s.two_j > 0;
    let up_den = 4.0 * (j + 1.0) * (2.0 * j + 1.0);
    let same_den = 4.0 * j * (j + 1.0);
    let down_den = 4.0 * j * (2.0 * j + 1.0);
    let n_up = n - 2.0 * j;
    let n_same = n + 2.0;
    let n_down = n + 2.0 * j + 2.0;

    push(0, Channel::CollectiveDecay, p.gamma_c * (j + m) * (j - m + 1.0));

    if p.w > 0.0 {
        if has_lower {
            push(0, Channel::Repump, p.w * n_same * (j - m) * (j + m + 1.0) / same_den);
            push(-1, Channel::Repump, p.w * n_down * (j - m) * (j - m - 1.0) / down_den);
        }
        push(1, Channel::Repump, p.w * n_up * (j + m + 1.0) * (j + m + 2.0) / up_den);
    }

    if p.gamma > 0.0 {
        if has_lower {
            push(0, Channel::IndividualDecay, p.gamma * n_same * (j + m) * (j - m + 1.0) / same_den);
            push(-1, Channel::IndividualDecay, p.gamma * n_down * (j + m) * (j + m - 1.0) / down_den);
        }
        push(1, Channel::IndividualDecay, p.gamma * n_up * (j - m + 1.0) * (j - m + 2.0) / up_den);
    }

    if p.t2_inv > 0.0 {
        let k = 4.0 * p.t2_inv;
        if has_lower {
            push(-1, Channel::Dephasing, k * n_down * (j - m) * (j + m) / down_den);
        }
        push(1, Channel::Dephasing, k * n_up * (j - m + 1.0) * (j + m + 1.0) / up_den);
    }
    out
}

/// Sparse generator `R` with `dP_j/dt = sum_k R_jk P_k`.
///
/// Off-diagonal entries are stored by column (flow out of the column
/// state), rows ascending. Transitions leaving the retained space are
/// dropped, so each column sums to minus that state's leakage.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    space: StateSpace,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<f64>,
    /// Outflow lost past the `J_max` rim.
    leak_j: Vec<f64>,
    /// Outflow lost past a ladder's height cap.
    leak_h: Vec<f64>,
}

pub fn build_rate_matrix(p: &ModelParams, space: &StateSpace) -> RateMatrix {
    let columns: Vec<(Vec<(usize, f64)>, f64, f64, f64)> = (0..space.size())
        .into_par_iter()
        .map(|k| {
            let s = space.state(k).expect("ordinal in range");
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(8);
            let (mut out, mut lj, mut lh) = (0.0, 0.0, 0.0);
            for t in channel_rates(p, s) {
                out += t.rate;
                match space.lookup(&t.to) {
                    Some(r) => match entries.iter_mut().find(|(row, _)| *row == r) {
                        Some(e) => e.1 += t.rate,
                        None => entries.push((r, t.rate)),
                    },
                    None if t.to.two_j > space.two_j_max() => lj += t.rate,
                    None => lh += t.rate,
                }
            }
            entries.sort_by_key(|e| e.0);
            (entries, -out, lj, lh)
        })
        .collect();

    let n = space.size();
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::new();
    let mut values = Vec::new();
    let mut diag = Vec::with_capacity(n);
    let mut leak_j = Vec::with_capacity(n);
    let mut leak_h = Vec::with_capacity(n);
    col_ptr.push(0);
    for (entries, d, lj, lh) in columns {
        for (r, v) in entries {
            row_idx.push(r);
            values.push(v);
        }
        col_ptr.push(row_idx.len());
        diag.push(d);
        leak_j.push(lj);
        leak_h.push(lh);
    }
    RateMatrix {
        space: space.clone(),
        col_ptr,
        row_idx,
        values,
        diag,
        leak_j,
        leak_h,
    }
}

impl RateMatrix {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal `(row, rate)` entries of column `k`.
    pub fn column(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[k]..self.col_ptr[k + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn nnz_offdiag(&self) -> usize {
        self.values.len()
    }

    /// Total dropped outflow of state `k`.
    pub fn leakage(&self, k: usize) -> f64 {
        self.leak_j[k] + self.leak_h[k]
    }

    pub fn leakage_j(&self) -> &[f64] {
        &self.leak_j
    }

    pub fn leakage_h(&self) -> &[f64] {
        &self.leak_h
    }

    pub fn column_sum(&self, k: usize) -> f64 {
        self.diag[k] + self.column(k).map(|(_, v)| v).sum::<f64>()
    }

    /// Largest diagonal magnitude.
    pub fn scale(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |a, d| a.max(d.abs()))
    }

    /// `R p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.diag.iter().zip(p).map(|(d, x)| d * x).collect();
        for (k, &pk) in p.iter().enumerate() {
            if pk == 0.0 {
                continue;
            }
            for (r, v) in self.column(k) {
                out[r] += v * pk;
            }
        }
        out
    }

    /// Writes `row col value` lines sorted by column then row, diagonal
    /// included, with 17 significant digits.
    pub fn write_coo<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# row col value")?;
        for k in 0..self.size() {
            let mut entries: Vec<(usize, f64)> = self.column(k).collect();
            entries.push((k, self.diag[k]));
            entries.sort_by_key(|e| e.0);
            for (r, v) in entries {
                writeln!(out, "{r} {k} {v:.16e}")?;
            }
        }
        Ok(())
    }
}
