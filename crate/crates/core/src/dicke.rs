//! The permutation-invariant `(J, M)` state space.
//!
//! Quantum numbers are stored doubled (`2J`, `2M`) so odd atom numbers,
//! with their half-integer ladders, use exact integers. States are ordered
//! by ascending `J` and, within a ladder, ascending `M`. Every coupling of
//! the rate matrix connects neighbouring ladders only, so this ordering
//! keeps the generator inside a narrow variable-width band.
//!
//! Besides the plain `J <= J_max` truncation a space may carry a per-ladder
//! height cap: only states with `J + M <= cap` are retained. Below the
//! critical repump the population hugs the `M = -J` edge, so a small cap
//! removes almost all of a large ladder at no cost in accuracy.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A collective state `|J, M>` in doubled units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DickeIndex {
    pub two_j: u32,
    pub two_m: i32,
}

impl DickeIndex {
    pub fn new(two_j: u32, two_m: i32) -> Self {
        Self { two_j, two_m }
    }

    /// The state `|J, M>` from undoubled quantum numbers. Both must be
    /// multiples of one half.
    pub fn from_jm(j: f64, m: f64) -> Self {
        Self {
            two_j: (2.0 * j).round() as u32,
            two_m: (2.0 * m).round() as i32,
        }
    }

    pub fn j(&self) -> f64 {
        f64::from(self.two_j) * 0.5
    }

    pub fn m(&self) -> f64 {
        f64::from(self.two_m) * 0.5
    }

    /// Distance `J + M` above the bottom of the ladder.
    pub fn height(&self) -> u32 {
        ((self.two_j as i64 + self.two_m as i64) / 2) as u32
    }

    pub fn is_valid_for(&self, n_atoms: u32) -> bool {
        self.two_j <= n_atoms
            && (self.two_j % 2) == (n_atoms % 2)
            && self.two_m.unsigned_abs() <= self.two_j
            && (self.two_m.rem_euclid(2) as u32) == self.two_j % 2
    }
}

/// Retained `(J, M)` states with a fixed ordinal numbering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    n_atoms: u32,
    two_j_min: u32,
    two_j_max: u32,
    /// Height cap per retained ladder, already clipped to `2J`.
    caps: Vec<u32>,
    /// Ordinal of the bottom state of each ladder; one extra trailing entry.
    offsets: Vec<usize>,
}

impl StateSpace {
    /// The untruncated space, `(N+2)^2/4` states for even `N`.
    pub fn full(n_atoms: u32) -> Self {
        Self::truncated(n_atoms, None)
    }

    /// Keeps ladders with `2J <= two_j_max`. A bound with the wrong parity
    /// is rounded down.
    pub fn truncated(n_atoms: u32, two_j_max: Option<u32>) -> Self {
        let two_j_min = n_atoms % 2;
        let top = two_j_max.unwrap_or(n_atoms).min(n_atoms);
        let top = if top < two_j_min {
            two_j_min
        } else {
            top - (top - two_j_min) % 2
        };
        let caps = (two_j_min..=top).step_by(2).collect();
        Self::from_caps(n_atoms, caps)
    }

    /// Ladders up to `two_j_max`, each capped at `J + M <= cap(J)`.
    pub fn with_envelope(n_atoms: u32, two_j_max: u32, cap: impl Fn(u32) -> u32) -> Self {
        let base = Self::truncated(n_atoms, Some(two_j_max));
        let caps = (base.two_j_min..=base.two_j_max)
            .step_by(2)
            .map(|tj| cap(tj).min(tj))
            .collect();
        Self::from_caps(n_atoms, caps)
    }

    /// Builds the space from explicit per-ladder caps, ladder `l` having
    /// `2J = (N mod 2) + 2l`.
    pub fn from_caps(n_atoms: u32, caps: Vec<u32>) -> Self {
        let two_j_min = n_atoms % 2;
        let caps: Vec<u32> = caps
            .into_iter()
            .enumerate()
            .map(|(l, c)| c.min(two_j_min + 2 * l as u32))
            .collect();
        let mut offsets = Vec::with_capacity(caps.len() + 1);
        let mut acc = 0usize;
        for c in &caps {
            offsets.push(acc);
            acc += *c as usize + 1;
        }
        offsets.push(acc);
        let two_j_max = two_j_min + 2 * (caps.len().max(1) as u32 - 1);
        Self {
            n_atoms,
            two_j_min,
            two_j_max,
            caps,
            offsets,
        }
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn two_j_min(&self) -> u32 {
        self.two_j_min
    }

    pub fn two_j_max(&self) -> u32 {
        self.two_j_max
    }

    pub fn size(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn n_ladders(&self) -> usize {
        self.caps.len()
    }

    /// Height cap of the ladder with the given `2J`, `None` if absent.
    pub fn cap(&self, two_j: u32) -> Option<u32> {
        self.ladder(two_j).map(|l| self.caps[l])
    }

    pub fn caps(&self) -> &[u32] {
        &self.caps
    }

    /// True when no state of the full triangle has been dropped.
    pub fn is_complete(&self) -> bool {
        self.two_j_max == self.n_atoms
            && self
                .caps
                .iter()
                .enumerate()
                .all(|(l, &c)| c == self.two_j_min + 2 * l as u32)
    }

    fn ladder(&self, two_j: u32) -> Option<usize> {
        if two_j < self.two_j_min || two_j > self.two_j_max || (two_j - self.two_j_min) % 2 != 0 {
            return None;
        }
        Some(((two_j - self.two_j_min) / 2) as usize)
    }

    pub fn contains(&self, s: &DickeIndex) -> bool {
        self.lookup(s).is_some()
    }

    /// Ordinal of `s`, or `None` if the state is not retained.
    pub fn lookup(&self, s: &DickeIndex) -> Option<usize> {
        if !s.is_valid_for(self.n_atoms) {
            return None;
        }
        let l = self.ladder(s.two_j)?;
        let h = s.height();
        if h > self.caps[l] {
            return None;
        }
        Some(self.offsets[l] + h as usize)
    }

    pub fn index(&self, s: &DickeIndex) -> Result<usize> {
        self.lookup(s).ok_or_else(|| {
            Error::Domain(format!(
                "state (2J={}, 2M={}) is not in the space",
                s.two_j, s.two_m
            ))
        })
    }

    pub fn state(&self, ordinal: usize) -> Result<DickeIndex> {
        if ordinal >= self.size() {
            return Err(Error::Domain(format!(
                "ordinal {ordinal} out of range for size {}",
                self.size()
            )));
        }
        // last ladder whose offset is <= ordinal
        let l = self.offsets.partition_point(|&o| o <= ordinal) - 1;
        let two_j = self.two_j_min + 2 * l as u32;
        let h = (ordinal - self.offsets[l]) as i32;
        Ok(DickeIndex::new(two_j, 2 * h - two_j as i32))
    }

    /// All retained states in ordinal order.
    pub fn iter(&self) -> impl Iterator<Item = DickeIndex> + '_ {
        self.caps.iter().enumerate().flat_map(move |(l, &c)| {
            let two_j = self.two_j_min + 2 * l as u32;
            (0..=c as i32).map(move |h| DickeIndex::new(two_j, 2 * h - two_j as i32))
        })
    }
}

/// Same as [`StateSpace::truncated`].
pub fn build_space(n_atoms: u32, two_j_max: Option<u32>) -> StateSpace {
    StateSpace::truncated(n_atoms, two_j_max)
}

/// Number of orthogonal ways `N` spin-1/2 particles couple to total spin `J`.
///
/// Evaluated exactly as `C(N, N/2-J) - C(N, N/2-J-1)`.
pub fn degeneracy(n_atoms: u32, two_j: u32) -> Result<BigUint> {
    if two_j > n_atoms || (n_atoms - two_j) % 2 != 0 {
        return Err(Error::Domain(format!(
            "2J = {two_j} is not an allowed total spin for N = {n_atoms}"
        )));
    }
    let k = (n_atoms - two_j) / 2;
    let upper = binomial(n_atoms, k);
    if k == 0 {
        return Ok(upper);
    }
    Ok(upper - binomial(n_atoms, k - 1))
}

fn binomial(n: u32, k: u32) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}
