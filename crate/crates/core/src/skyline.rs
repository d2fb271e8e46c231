//! Variable-band (skyline) LU factorisation without pivoting.
//!
//! Used for generator-like matrices that are column diagonally dominant,
//! where elimination in natural order is stable and never fills outside
//! the envelope of the original matrix.

/// Square matrix in skyline storage, factorised in place.
#[derive(Debug, Clone)]
pub(crate) struct Skyline {
    n: usize,
    /// First stored column of row `i` of `L`.
    row_start: Vec<usize>,
    /// First stored row of column `j` of `U`.
    col_start: Vec<usize>,
    l_ptr: Vec<usize>,
    u_ptr: Vec<usize>,
    /// Strictly lower part, row-wise.
    lower: Vec<f64>,
    /// Strictly upper part, column-wise.
    upper: Vec<f64>,
    diag: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ZeroPivot {
    pub index: usize,
    pub value: f64,
}

impl Skyline {
    /// Allocates the envelope of the given `(row, col, value)` entries and
    /// scatters them in. Duplicates are summed.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut row_start: Vec<usize> = (0..n).collect();
        let mut col_start: Vec<usize> = (0..n).collect();
        for &(r, c, _) in entries {
            if r > c {
                row_start[r] = row_start[r].min(c);
            } else if c > r {
                col_start[c] = col_start[c].min(r);
            }
        }
        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut u_ptr = Vec::with_capacity(n + 1);
        let (mut la, mut ua) = (0usize, 0usize);
        for i in 0..n {
            l_ptr.push(la);
            u_ptr.push(ua);
            la += i - row_start[i];
            ua += i - col_start[i];
        }
        l_ptr.push(la);
        u_ptr.push(ua);
        let mut s = Self {
            n,
            row_start,
            col_start,
            l_ptr,
            u_ptr,
            lower: vec![0.0; la],
            upper: vec![0.0; ua],
            diag: vec![0.0; n],
        };
        for &(r, c, v) in entries {
            if r == c {
                s.diag[r] += v;
            } else if r > c {
                let at = s.l_ptr[r] + (c - s.row_start[r]);
                s.lower[at] += v;
            } else {
                let at = s.u_ptr[c] + (r - s.col_start[c]);
                s.upper[at] += v;
            }
        }
        s
    }

    #[cfg(test)]
    pub fn envelope_len(&self) -> usize {
        self.lower.len() + self.upper.len() + self.n
    }

    /// Doolittle factorisation `A = L U` with unit-diagonal `L`.
    ///
    /// Fails when a pivot falls below `tiny` in magnitude.
    pub fn factorize(&mut self, tiny: f64) -> Result<(), ZeroPivot> {
        for i in 0..self.n {
            // column i of U
            let cs = self.col_start[i];
            for j in cs..i {
                let rs_j = self.row_start[j];
                let lo = rs_j.max(cs);
                let mut acc = 0.0;
                if lo < j {
                    let lrow = &self.lower[self.l_ptr[j] + (lo - rs_j)..self.l_ptr[j] + (j - rs_j)];
                    let ucol = &self.upper[self.u_ptr[i] + (lo - cs)..self.u_ptr[i] + (j - cs)];
                    acc = dot(lrow, ucol);
                }
                self.upper[self.u_ptr[i] + (j - cs)] -= acc;
            }
            // row i of L
            let rs = self.row_start[i];
            for j in rs..i {
                let cs_j = self.col_start[j];
                let lo = cs_j.max(rs);
                let mut acc = 0.0;
                if lo < j {
                    let lrow = &self.lower[self.l_ptr[i] + (lo - rs)..self.l_ptr[i] + (j - rs)];
                    let ucol = &self.upper[self.u_ptr[j] + (lo - cs_j)..self.u_ptr[j] + (j - cs_j)];
                    acc = dot(lrow, ucol);
                }
                let at = self.l_ptr[i] + (j - rs);
                self.lower[at] = (self.lower[at] - acc) / self.diag[j];
            }
            // pivot
            let lo = rs.max(cs);
            if lo < i {
                let lrow = &self.lower[self.l_ptr[i] + (lo - rs)..self.l_ptr[i] + (i - rs)];
                let ucol = &self.upper[self.u_ptr[i] + (lo - cs)..self.u_ptr[i] + (i - cs)];
                self.diag[i] -= dot(lrow, ucol);
            }
            if !(self.diag[i].abs() > tiny) {
                return Err(ZeroPivot {
                    index: i,
                    value: self.diag[i],
                });
            }
        }
        Ok(())
    }

    /// Solves `L U x = b` in place. Requires a successful [`factorize`].
    pub fn solve_in_place(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let rs = self.row_start[i];
            if rs < i {
                let lrow = &self.lower[self.l_ptr[i]..self.l_ptr[i + 1]];
                b[i] -= dot(lrow, &b[rs..i]);
            }
        }
        for j in (0..self.n).rev() {
            b[j] /= self.diag[j];
            let xj = b[j];
            let cs = self.col_start[j];
            if xj != 0.0 {
                let ucol = &self.upper[self.u_ptr[j]..self.u_ptr[j + 1]];
                for (bk, u) in b[cs..j].iter_mut().zip(ucol) {
                    *bk -= u * xj;
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators; the summation order is fixed so results are reproducible
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
