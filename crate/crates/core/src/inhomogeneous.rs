//! Second-order cumulants for atoms spread over the cavity mode function.
//!
//! Atoms sit at bin centres `theta_m` with `N_m` atoms each and couple
//! through `gamma_c cos(theta_n) cos(theta_m)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cumulant::default_options;
use crate::error::{Error, Result};
use crate::ode::{integrate_to_steady, SteadyOptions};
use crate::params::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InhomConfig {
    /// Phase `2 pi x / lambda` of each bin.
    pub positions: Vec<f64>,
    pub counts: Vec<u32>,
}

impl InhomConfig {
    /// `m` equal bins over one wavelength, `theta_m = 2 pi (m - 1/2) / M`,
    /// with the atoms shared as evenly as possible.
    pub fn uniform(bins: usize, n_atoms: u32) -> Self {
        let m = bins as u32;
        let counts = (0..m).map(|i| n_atoms / m + u32::from(i < n_atoms % m)).collect();
        Self {
            positions: (1..=bins).map(|i| 2.0 * PI * (i as f64 - 0.5) / bins as f64).collect(),
            counts,
        }
    }

    /// Every atom at a single phase.
    pub fn trapped(theta: f64, n_atoms: u32) -> Self {
        Self {
            positions: vec![theta],
            counts: vec![n_atoms],
        }
    }

    pub fn bins(&self) -> usize {
        self.positions.len()
    }

    pub fn n_atoms(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn validate(&self, p: &ModelParams) -> Result<()> {
        if self.positions.is_empty() || self.positions.len() != self.counts.len() {
            return Err(Error::InvalidParams(format!(
                "need matching, non-empty positions and counts (got {} and {})",
                self.positions.len(),
                self.counts.len()
            )));
        }
        if self.positions.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParams("bin positions must be finite".into()));
        }
        if self.n_atoms() != p.n_atoms {
            return Err(Error::InvalidParams(format!(
                "bin counts sum to {} but n_atoms = {}",
                self.n_atoms(),
                p.n_atoms
            )));
        }
        Ok(())
    }

    /// `Gamma^{n,m}`.
    pub fn coupling(&self, p: &ModelParams) -> DMatrix<f64> {
        let c: Vec<f64> = self.positions.iter().map(|t| t.cos()).collect();
        DMatrix::from_fn(self.bins(), self.bins(), |i, j| p.gamma_c * c[i] * c[j])
    }

    /// Atom-weighted mean of `cos^2 theta`.
    pub fn mean_cos2(&self) -> f64 {
        let n = f64::from(self.n_atoms());
        self.positions
            .iter()
            .zip(&self.counts)
            .map(|(t, &c)| f64::from(c) * t.cos().powi(2))
            .sum::<f64>()
            / n
    }
}

/// Bin layout independent of `N`: either `bins` uniform bins, or explicit
/// positions with counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InhomSpec {
    #[serde(default)]
    pub bins: Option<usize>,
    #[serde(default)]
    pub positions: Option<Vec<f64>>,
    #[serde(default)]
    pub counts: Option<Vec<u32>>,
}

impl InhomSpec {
    pub fn uniform(bins: usize) -> Self {
        Self {
            bins: Some(bins),
            positions: None,
            counts: None,
        }
    }

    pub fn resolve(&self, n_atoms: u32) -> Result<InhomConfig> {
        match (&self.positions, &self.counts) {
            (Some(positions), Some(counts)) => Ok(InhomConfig {
                positions: positions.clone(),
                counts: counts.clone(),
            }),
            (Some(positions), None) => {
                let u = InhomConfig::uniform(positions.len(), n_atoms);
                Ok(InhomConfig {
                    positions: positions.clone(),
                    counts: u.counts,
                })
            }
            (None, Some(_)) => Err(Error::InvalidParams("bin counts given without positions".into())),
            (None, None) => match self.bins {
                Some(b) if b > 0 => Ok(InhomConfig::uniform(b, n_atoms)),
                _ => Err(Error::InvalidParams("need a positive bin count or explicit positions".into())),
            },
        }
    }
}

/// Per-bin moments; `spm` is the symmetrized `<s+_k s-_q>`.
#[derive(Debug, Clone, PartialEq)]
pub struct InhomState {
    pub sz: Vec<f64>,
    pub spm: DMatrix<f64>,
    pub szz: DMatrix<f64>,
}

impl InhomState {
    pub fn all_down(bins: usize) -> Self {
        Self {
            sz: vec![-1.0; bins],
            spm: DMatrix::zeros(bins, bins),
            szz: DMatrix::from_element(bins, bins, 1.0),
        }
    }

    /// `X_k = (1/N) sum_m N_m cos(theta_m) spm[k, m]`.
    pub fn x_moments(&self, cfg: &InhomConfig) -> Vec<f64> {
        let n = f64::from(cfg.n_atoms());
        (0..cfg.bins())
            .map(|k| {
                (0..cfg.bins())
                    .map(|m| f64::from(cfg.counts[m]) * cfg.positions[m].cos() * self.spm[(k, m)])
                    .sum::<f64>()
                    / n
            })
            .collect()
    }

    fn pack(&self) -> Vec<f64> {
        let m = self.sz.len();
        let mut x = self.sz.clone();
        for mat in [&self.spm, &self.szz] {
            for k in 0..m {
                for q in k..m {
                    x.push(mat[(k, q)]);
                }
            }
        }
        x
    }

    fn unpack(m: usize, x: &[f64]) -> Self {
        let tri = m * (m + 1) / 2;
        let mut s = Self::all_down(m);
        s.sz.copy_from_slice(&x[..m]);
        let mut i = 0;
        for k in 0..m {
            for q in k..m {
                s.spm[(k, q)] = x[m + i];
                s.spm[(q, k)] = x[m + i];
                s.szz[(k, q)] = x[m + tri + i];
                s.szz[(q, k)] = x[m + tri + i];
                i += 1;
            }
        }
        s
    }
}

struct Model<'a> {
    p: &'a ModelParams,
    c: Vec<f64>,
    g: DMatrix<f64>,
    counts: Vec<f64>,
}

impl<'a> Model<'a> {
    fn new(cfg: &InhomConfig, p: &'a ModelParams) -> Self {
        Self {
            p,
            c: cfg.positions.iter().map(|t| t.cos()).collect(),
            g: cfg.coupling(p),
            counts: cfg.counts.iter().map(|&c| f64::from(c)).collect(),
        }
    }

    fn rhs(&self, s: &InhomState) -> InhomState {
        let m = self.c.len();
        let (w, gam, gc) = (self.p.w, self.p.gamma, self.p.gamma_c);
        let g = &self.g;
        let (sz, spm, szz) = (&s.sz, &s.spm, &s.szz);
        // sum_m N_m Gamma^{k,m} spm[m, q] = c_k a[q]
        let a: Vec<f64> = (0..m)
            .map(|q| (0..m).map(|j| self.counts[j] * gc * self.c[j] * spm[(j, q)]).sum())
            .collect();
        let mut d = InhomState::all_down(m);
        for k in 0..m {
            let gkk = g[(k, k)];
            d.sz[k] = -(w + gam + gkk) * sz[k] + (w - gam - gkk) - 2.0 * (self.c[k] * a[k] - gkk * spm[(k, k)]);
        }
        for k in 0..m {
            for q in k..m {
                let (gkk, gqq, gkq) = (g[(k, k)], g[(q, q)], g[(k, q)]);
                let decay = w + gam + 0.5 * (gkk + gqq);
                // sum_m (N_m - d_km - d_qm) Gamma^{k,m} spm[m, q] and its mirror
                let sk = self.c[k] * a[q] - gkk * spm[(k, q)] - gkq * spm[(q, q)];
                let sq = self.c[q] * a[k] - gkq * spm[(k, k)] - gqq * spm[(k, q)];
                let dp = -(decay + 4.0 * self.p.t2_inv) * spm[(k, q)]
                    + 0.5 * gkq * szz[(k, q)]
                    + 0.25 * gkq * (sz[k] + sz[q])
                    + 0.5 * (sk * sz[k] + sq * sz[q]);
                let tk = self.c[k] * a[k] - gkk * spm[(k, k)] - gkq * spm[(k, q)];
                let tq = self.c[q] * a[q] - gkq * spm[(k, q)] - gqq * spm[(q, q)];
                let dz = -2.0 * decay * szz[(k, q)] + (w - gam - gkk) * sz[q] + (w - gam - gqq) * sz[k]
                    - 2.0 * (tk * sz[q] + tq * sz[k])
                    + 4.0 * gkq * spm[(k, q)];
                d.spm[(k, q)] = dp;
                d.spm[(q, k)] = dp;
                d.szz[(k, q)] = dz;
                d.szz[(q, k)] = dz;
            }
        }
        d
    }
}

/// Time derivatives of the binned second-order moments.
pub fn inhom_rhs(s: &InhomState, cfg: &InhomConfig, p: &ModelParams) -> InhomState {
    Model::new(cfg, p).rhs(s)
}

pub fn inhom_steady(cfg: &InhomConfig, p: &ModelParams) -> Result<InhomState> {
    inhom_steady_with(cfg, p, &default_options(p))
}

pub fn inhom_steady_with(cfg: &InhomConfig, p: &ModelParams, opts: &SteadyOptions) -> Result<InhomState> {
    p.validate()?;
    cfg.validate(p)?;
    let model = Model::new(cfg, p);
    let m = cfg.bins();
    let x0 = InhomState::all_down(m).pack();
    let report = integrate_to_steady(
        |x: &[f64], d: &mut [f64]| d.copy_from_slice(&model.rhs(&InhomState::unpack(m, x)).pack()),
        &x0,
        opts,
    )?;
    Ok(InhomState::unpack(m, &report.x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InhomObservables {
    pub n_atoms: u32,
    pub jz_mean: f64,
    /// Cavity output `gamma_c P`.
    pub power: f64,
    pub sf: f64,
}

impl InhomObservables {
    /// `P / N`, comparable with `<J+J->/N` of the homogeneous model.
    pub fn power_per_atom(&self, p: &ModelParams) -> f64 {
        self.power / (p.gamma_c * f64::from(self.n_atoms))
    }
}

pub fn inhom_observables(s: &InhomState, cfg: &InhomConfig, p: &ModelParams) -> InhomObservables {
    let g = cfg.coupling(p);
    let m = cfg.bins();
    let nm: Vec<f64> = cfg.counts.iter().map(|&c| f64::from(c)).collect();
    let n = f64::from(cfg.n_atoms());
    let jz = 0.5 * (0..m).map(|k| nm[k] * s.sz[k]).sum::<f64>();
    let single: f64 = (0..m).map(|k| g[(k, k)] * nm[k] / 2.0 * (1.0 + s.sz[k])).sum();
    let mut pair = 0.0;
    for k in 0..m {
        for q in 0..m {
            let pairs = nm[k] * nm[q] - if k == q { nm[k] } else { 0.0 };
            pair += g[(k, q)] * pairs * s.spm[(k, q)];
        }
    }
    InhomObservables {
        n_atoms: cfg.n_atoms(),
        jz_mean: jz,
        power: single + pair,
        sf: pair / (n * p.gamma_c),
    }
}
