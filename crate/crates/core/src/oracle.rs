//! Brute-force steady state of the full master equation for a few atoms.
//!
//! Every jump operator (`sigma_j^+`, `sigma_j^-`, `J^-`, `sigma_j^z`) is real
//! in the product basis, so the Liouvillian and its stationary state are real
//! and dense real linear algebra suffices. Basis state `b` has atom `j`
//! excited when bit `j` of `b` is set.

use nalgebra::{DMatrix, DVector};

use crate::dicke::DickeIndex;
use crate::error::{Error, Result};
use crate::observables::ObservablesRecord;
use crate::params::ModelParams;

pub const MAX_ATOMS: u32 = 4;

/// Real symmetric density matrix on `N` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub n_atoms: u32,
    pub rho: DMatrix<f64>,
}

/// Exact one-, two- and three-atom moments of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomMoments {
    pub sz: f64,
    pub spm: f64,
    pub szz: f64,
    pub spmz: f64,
    pub szzz: f64,
}

/// Single-atom and collective operators on `N` qubits.
pub struct SpinOperators {
    pub n_atoms: u32,
    pub sp: Vec<DMatrix<f64>>,
    pub sm: Vec<DMatrix<f64>>,
    pub sz: Vec<DMatrix<f64>>,
    pub jp: DMatrix<f64>,
    pub jm: DMatrix<f64>,
    pub jz: DMatrix<f64>,
}

impl SpinOperators {
    pub fn new(n_atoms: u32) -> Self {
        let dim = 1usize << n_atoms;
        let mut sp = Vec::new();
        let mut sz = Vec::new();
        for j in 0..n_atoms as usize {
            let mut p = DMatrix::zeros(dim, dim);
            let mut z = DMatrix::zeros(dim, dim);
            for b in 0..dim {
                if b >> j & 1 == 0 {
                    p[(b | 1 << j, b)] = 1.0;
                    z[(b, b)] = -1.0;
                } else {
                    z[(b, b)] = 1.0;
                }
            }
            sp.push(p);
            sz.push(z);
        }
        let sm: Vec<DMatrix<f64>> = sp.iter().map(|m| m.transpose()).collect();
        let mut jp = DMatrix::zeros(dim, dim);
        let mut jz = DMatrix::zeros(dim, dim);
        for j in 0..n_atoms as usize {
            jp += &sp[j];
            jz += &sz[j] * 0.5;
        }
        let jm = jp.transpose();
        Self {
            n_atoms,
            sp,
            sm,
            sz,
            jp,
            jm,
            jz,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_atoms
    }

    /// `J^2 = J+J- + Jz^2 - Jz`.
    pub fn j2(&self) -> DMatrix<f64> {
        &self.jp * &self.jm + &self.jz * &self.jz - &self.jz
    }
}

fn dissipator(o: &DMatrix<f64>, rate: f64, out: &mut DMatrix<f64>) {
    if rate == 0.0 {
        return;
    }
    let dim = o.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let oto = o.transpose() * o;
    // column-major vec: vec(A X B) = (B^T kron A) vec(X)
    *out += (o.kronecker(o) - id.kronecker(&oto) * 0.5 - oto.kronecker(&id) * 0.5) * rate;
}

fn check_size(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if p.n_atoms > MAX_ATOMS {
        return Err(Error::Capability {
            what: "the Liouvillian oracle",
            n: p.n_atoms,
            max: MAX_ATOMS,
        });
    }
    Ok(())
}

/// Superoperator acting on column-major `vec(rho)`.
pub fn build_liouvillian(p: &ModelParams) -> Result<DMatrix<f64>> {
    check_size(p)?;
    let ops = SpinOperators::new(p.n_atoms);
    let d2 = ops.dim() * ops.dim();
    let mut l = DMatrix::zeros(d2, d2);
    for j in 0..p.n_atoms as usize {
        dissipator(&ops.sp[j], p.w, &mut l);
        dissipator(&ops.sm[j], p.gamma, &mut l);
        dissipator(&ops.sz[j], p.t2_inv, &mut l);
    }
    dissipator(&ops.jm, p.gamma_c, &mut l);
    Ok(l)
}

pub fn oracle_steady(p: &ModelParams) -> Result<DensityMatrix> {
    let l = build_liouvillian(p)?;
    let dim = 1usize << p.n_atoms;
    let svd = l.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.max();
    let null: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= 1e-10 * smax.max(1.0))
        .collect();
    if null.len() != 1 {
        return Err(Error::DegenerateNullspace(null.len()));
    }
    let v: DVector<f64> = v_t.row(null[0]).transpose();
    let rho = DMatrix::from_column_slice(dim, dim, v.as_slice());
    let rho = (&rho + rho.transpose()) * 0.5;
    let tr = rho.trace();
    Ok(DensityMatrix {
        n_atoms: p.n_atoms,
        rho: rho / tr,
    })
}

impl DensityMatrix {
    pub fn expect(&self, op: &DMatrix<f64>) -> f64 {
        (op * &self.rho).trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.rho - self.rho.transpose()).amax() <= tol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho.clone().symmetric_eigen().eigenvalues.min()
    }
}

/// Observables computed directly from operator expectations, with the
/// full three-component variance in the squeezing parameter.
pub fn oracle_observables(rho: &DensityMatrix) -> ObservablesRecord {
    let ops = SpinOperators::new(rho.n_atoms);
    let n = f64::from(rho.n_atoms);
    let jpjm_op = &ops.jp * &ops.jm;
    let jz = rho.expect(&ops.jz);
    let jz2 = rho.expect(&(&ops.jz * &ops.jz));
    let jpjm = rho.expect(&jpjm_op);
    let jp2jm2 = rho.expect(&(&ops.jp * &ops.jp * &ops.jm * &ops.jm));
    let jx = (&ops.jp + &ops.jm) * 0.5;
    let jy_minus = &ops.jp - &ops.jm;
    // Jy = (J+ - J-)/2i, so Jy^2 = -(J+ - J-)^2/4; <Jy> vanishes for real rho
    let var_x = rho.expect(&(&jx * &jx)) - rho.expect(&jx).powi(2);
    let var_y = -rho.expect(&(&jy_minus * &jy_minus)) / 4.0;
    let var_z = jz2 - jz * jz;
    let sigz = rho.expect(&ops.sz[0]);
    let spm = if rho.n_atoms > 1 {
        rho.expect(&(&ops.sp[0] * &ops.sm[1]))
    } else {
        0.0
    };
    ObservablesRecord {
        n_atoms: rho.n_atoms,
        jz_mean: jz,
        jz_var: var_z,
        jpjm,
        jp2jm2: Some(jp2jm2),
        j2_mean: rho.expect(&ops.j2()),
        sf: (jpjm - n / 2.0 - jz) / n,
        xi2: (var_x + var_y + var_z) / (n / 2.0),
        g2: if jpjm > 0.0 {
            Some(jp2jm2 / (jpjm * jpjm))
        } else {
            None
        },
        sigz_mean: sigz,
        spm_corr: spm,
    }
}

/// Moments on atoms 1, 2 and 3. Missing atoms contribute zero.
pub fn oracle_moments(rho: &DensityMatrix) -> AtomMoments {
    let ops = SpinOperators::new(rho.n_atoms);
    let n = rho.n_atoms as usize;
    let e = |m: DMatrix<f64>| rho.expect(&m);
    AtomMoments {
        sz: e(ops.sz[0].clone()),
        spm: if n > 1 { e(&ops.sp[0] * &ops.sm[1]) } else { 0.0 },
        szz: if n > 1 { e(&ops.sz[0] * &ops.sz[1]) } else { 0.0 },
        spmz: if n > 2 {
            e(&ops.sp[0] * &ops.sm[1] * &ops.sz[2])
        } else {
            0.0
        },
        szzz: if n > 2 {
            e(&ops.sz[0] * &ops.sz[1] * &ops.sz[2])
        } else {
            0.0
        },
    }
}

/// Projector onto the total-spin sector `J` (built from `J^2`) times the
/// projector onto `Jz = M`.
fn block_projector(ops: &SpinOperators, s: DickeIndex) -> DMatrix<f64> {
    let dim = ops.dim();
    let j2 = ops.j2();
    let target = s.j() * (s.j() + 1.0);
    let mut pj = DMatrix::<f64>::identity(dim, dim);
    let mut tj = ops.n_atoms % 2;
    while tj <= ops.n_atoms {
        if tj != s.two_j {
            let jj = f64::from(tj) / 2.0;
            let other = jj * (jj + 1.0);
            let id = DMatrix::<f64>::identity(dim, dim);
            pj = pj * (&j2 - id * other) / (target - other);
        }
        tj += 2;
    }
    let mut pm = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let ones = (b as u32).count_ones() as i32;
        if 2 * ones - ops.n_atoms as i32 == s.two_m {
            pm[(b, b)] = 1.0;
        }
    }
    pj * pm
}

/// Per-block population, the defect from uniformity within the block
/// `Tr((Q rho Q)^2) - p^2/d`, and the weight outside all blocks.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub blocks: Vec<(DickeIndex, f64, f64)>,
    pub off_block: f64,
}

pub fn block_structure(rho: &DensityMatrix) -> BlockStructure {
    let ops = SpinOperators::new(rho.n_atoms);
    let n = rho.n_atoms;
    let mut blocks = Vec::new();
    let mut diag_part = DMatrix::zeros(ops.dim(), ops.dim());
    let mut tj = n % 2;
    while tj <= n {
        let mut tm = -(tj as i32);
        while tm <= tj as i32 {
            let s = DickeIndex::new(tj, tm);
            let q = block_projector(&ops, s);
            let d = q.trace();
            let qrq = &q * &rho.rho * &q;
            let pop = qrq.trace();
            let purity = (&qrq * &qrq).trace();
            blocks.push((s, pop, purity - pop * pop / d));
            diag_part += qrq;
            tm += 2;
        }
        tj += 2;
    }
    BlockStructure {
        blocks,
        off_block: (&rho.rho - diag_part).amax(),
    }
}
