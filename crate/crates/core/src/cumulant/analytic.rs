//! Leading-order large-`N` solutions of the cumulant hierarchy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `w < gamma`: O(1) output.
    Below,
    /// `gamma <= w < gamma + gamma_c`: O(N) output.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRecord {
    /// Inversion at order `N^0`.
    pub sz0: f64,
    /// `<s1+ s2->` at order `1/N`.
    pub spm1: f64,
    /// `<J+J->` at order `N^0` in the per-atom moments, i.e. extensive.
    pub jpjm0: f64,
    pub sf: f64,
    /// Squeezing parameter at order `1/N`.
    pub xi2_1: f64,
    pub regime: Regime,
}

/// Closed-form leading order for `0 < w < gamma + gamma_c`. The point
/// `w = gamma` is assigned to the upper branch.
pub fn analytic_leading(p: &ModelParams) -> Result<AnalyticRecord> {
    p.validate()?;
    let (w, g, gc) = (p.w, p.gamma, p.gamma_c);
    if !(w > 0.0 && w < g + gc) {
        return Err(Error::Domain(format!(
            "leading-order solution needs 0 < w < gamma + gamma_c = {}, got w = {w}",
            g + gc
        )));
    }
    let n = f64::from(p.n_atoms);
    let (_, gm) = p.derived_gammas();
    let r = if w < g {
        let sz0 = (w - g) / (w + g);
        let spm1 = -w / (n * (w + g));
        AnalyticRecord {
            sz0,
            spm1,
            jpjm0: 0.0,
            sf: n * spm1,
            xi2_1: (3.0 * g - w) / (2.0 * (w + g)) - 0.5 * sz0 * sz0,
            regime: Regime::Below,
        }
    } else {
        let spm1 = gm / (2.0 * n * gc);
        AnalyticRecord {
            sz0: 0.0,
            spm1,
            jpjm0: n * (w - g) / (2.0 * gc),
            sf: n * spm1,
            xi2_1: 1.5 * (w - g) / gc,
            regime: Regime::Above,
        }
    };
    Ok(r)
}
