//! Model parameters shared by every solver.
//!
//! All rates are measured in units of the cavity emission rate `gamma_c`,
//! which defaults to one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn one() -> f64 {
    1.0
}

/// Parameters of the pumped, collectively decaying spin ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Number of atoms `N`.
    pub n_atoms: u32,
    /// Free-space decay rate per atom.
    pub gamma: f64,
    /// Incoherent repump rate per atom.
    pub w: f64,
    /// Collective emission rate into the cavity.
    #[serde(default = "one")]
    pub gamma_c: f64,
    /// Single-atom dephasing rate `1/T2`.
    #[serde(default)]
    pub t2_inv: f64,
}

impl ModelParams {
    pub fn new(n_atoms: u32, gamma: f64, w: f64) -> Self {
        Self {
            n_atoms,
            gamma,
            w,
            gamma_c: 1.0,
            t2_inv: 0.0,
        }
    }

    /// Parameters at cooperativity `c` with `gamma_c = 1`.
    pub fn with_cooperativity(n_atoms: u32, c: f64, w: f64) -> Self {
        Self::new(n_atoms, 1.0 / c, w)
    }

    pub fn gamma_c(mut self, gamma_c: f64) -> Self {
        self.gamma_c = gamma_c;
        self
    }

    pub fn t2_inv(mut self, t2_inv: f64) -> Self {
        self.t2_inv = t2_inv;
        self
    }

    /// Dephasing tied to the repump, `1/T2 = alpha * w`.
    pub fn alpha(mut self, alpha: f64) -> Self {
        self.t2_inv = alpha * self.w;
        self
    }

    pub fn w(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    pub fn n_atoms(mut self, n: u32) -> Self {
        self.n_atoms = n;
        self
    }

    /// `C = gamma_c / gamma`; infinite when `gamma == 0`.
    pub fn cooperativity(&self) -> f64 {
        if self.gamma > 0.0 {
            self.gamma_c / self.gamma
        } else {
            f64::INFINITY
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::InvalidParams("n_atoms must be >= 1".into()));
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("w", self.w),
            ("gamma_c", self.gamma_c),
            ("t2_inv", self.t2_inv),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn derived_gammas(&self) -> (f64, f64) {
        derived_gammas(self)
    }
}

/// Returns `(w + gamma + gamma_c, w - gamma - gamma_c)`.
pub fn derived_gammas(p: &ModelParams) -> (f64, f64) {
    let loss = p.gamma + p.gamma_c;
    (p.w + loss, p.w - loss)
}

/// Three-level repump: `|down> -> |a>` driven at Rabi frequency `omega_p`,
/// with `|a>` decaying to `|up>` at `gamma_p` and back to `|down>` at `gamma_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpLevelScheme {
    pub omega_p: f64,
    pub gamma_p: f64,
    pub gamma_a: f64,
    /// Total broadening of the `|down> <-> |a>` transition, taken as an
    /// independent input.
    pub big_gamma: f64,
}

/// Effective rates produced by a [`PumpLevelScheme`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectivePump {
    pub w: f64,
    pub t2_inv: f64,
    /// `alpha = 1 / (w T2)`.
    pub alpha: f64,
}

pub fn effective_pump_rates(s: &PumpLevelScheme) -> Result<EffectivePump> {
    for (name, v) in [
        ("omega_p", s.omega_p),
        ("gamma_p", s.gamma_p),
        ("gamma_a", s.gamma_a),
        ("big_gamma", s.big_gamma),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidScheme(format!(
                "{name} must be finite and positive, got {v}"
            )));
        }
    }
    let denom = s.big_gamma * (s.gamma_p + s.gamma_a);
    if denom == 0.0 {
        return Err(Error::InvalidScheme("zero denominator".into()));
    }
    let omega2 = s.omega_p * s.omega_p;
    Ok(EffectivePump {
        w: omega2 * s.gamma_p / denom,
        t2_inv: omega2 * s.gamma_a / (4.0 * denom),
        alpha: s.gamma_a / (4.0 * s.gamma_p),
    })
}
