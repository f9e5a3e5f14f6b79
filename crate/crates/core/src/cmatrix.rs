//! Dense complex matrices with zero-skipping products and an LU factorization.
//!
//! Most operators in the transfer-matrix pipeline are bin-diagonal (a few
//! nonzeros per row) while the nonlinear sources are dense blocks. Products and
//! factorizations skip exact zeros so both cases stay cheap without a separate
//! sparse type.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
fn is_zero(z: C64) -> bool {
    z.re == 0.0 && z.im == 0.0
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Compressed sparse rows, used internally for products and triangular solves.
#[derive(Debug, Clone)]
struct Csr {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<C64>,
}

impl Csr {
    fn from_dense(m: &CMatrix) -> Csr {
        let mut ptr = Vec::with_capacity(m.rows + 1);
        let mut idx = Vec::new();
        let mut val = Vec::new();
        ptr.push(0);
        for i in 0..m.rows {
            for (j, &v) in m.row(i).iter().enumerate() {
                if !is_zero(v) {
                    idx.push(j);
                    val.push(v);
                }
            }
            ptr.push(idx.len());
        }
        Csr { ptr, idx, val }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.ptr[i], self.ptr[i + 1]);
        self.idx[a..b].iter().copied().zip(self.val[a..b].iter().copied())
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds from row-major data. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        CMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|z| !is_zero(**z)).count()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Matrix product with shape check. Zero entries of either factor are skipped.
    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        let dense_rhs = rhs.nnz() * 4 > rhs.data.len();
        if dense_rhs {
            for i in 0..self.rows {
                let a_row = self.row(i);
                let o = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (k, &a) in a_row.iter().enumerate() {
                    if is_zero(a) {
                        continue;
                    }
                    for (oj, &b) in o.iter_mut().zip(rhs.row(k)) {
                        *oj += a * b;
                    }
                }
            }
        } else {
            let csr = Csr::from_dense(rhs);
            for i in 0..self.rows {
                let a_row = self.row(i);
                let o = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (k, &a) in a_row.iter().enumerate() {
                    if is_zero(a) {
                        continue;
                    }
                    for (j, b) in csr.row(k) {
                        o[j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Product of a chain of matrices, left to right.
    pub fn chain(factors: &[&CMatrix]) -> Result<CMatrix> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::DimensionMismatch("empty product".into()))?;
        rest.iter().try_fold((*first).clone(), |acc, m| acc.matmul(m))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times vector of {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn check_same(&self, rhs: &CMatrix, op: &str) -> Result<()> {
        if self.shape() != rhs.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{op} of {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.check_same(rhs, "sum")?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.check_same(rhs, "difference")?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add_assign(&mut self, rhs: &CMatrix) -> Result<()> {
        self.check_same(rhs, "sum")?;
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> CMatrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "block out of range");
        CMatrix::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMatrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            let dst = &mut self.data[(r0 + i) * self.cols + c0..(r0 + i) * self.cols + c0 + b.cols];
            dst.copy_from_slice(b.row(i));
        }
    }

    /// Frobenius norm of `self - rhs` divided by the Frobenius norm of `rhs`
    /// (absolute difference when `rhs` is zero).
    pub fn rel_diff(&self, rhs: &CMatrix) -> Result<f64> {
        let d = self.sub(rhs)?.frobenius_norm();
        let n = rhs.frobenius_norm();
        Ok(if n > 0.0 { d / n } else { d })
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::factor(self)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.lu()?.inverse()
    }

    /// Solves `self * X = rhs`.
    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        self.lu()?.solve(rhs)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
///
/// Elimination skips zero multipliers, so block-structured matrices with a few
/// nonzeros per row factor in near-linear time. Factors are kept in CSR form.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    /// `perm[i]` is the row of A placed at row i.
    perm: Vec<usize>,
    lower: Csr,
    upper: Csr,
    diag: Vec<C64>,
    norm_1: f64,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Lu> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU of non-square {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let norm_1 = a.norm_1();
        let mut m = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut lmul: Vec<Vec<(usize, C64)>> = vec![Vec::new(); n];
        for j in 0..n {
            let mut piv = j;
            let mut best = 0.0;
            for i in j..n {
                let v = m.data[i * n + j].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 || !best.is_finite() || best <= norm_1 * 1e-300 {
                return Err(Error::SingularMatrix(format!("LU pivot {j} of {n}")));
            }
            if piv != j {
                for c in 0..n {
                    m.data.swap(j * n + c, piv * n + c);
                }
                perm.swap(j, piv);
                lmul.swap(j, piv);
            }
            let pivot = m.data[j * n + j];
            let (top, bottom) = m.data.split_at_mut((j + 1) * n);
            let prow = &top[j * n..(j + 1) * n];
            let nz: Vec<usize> = (j + 1..n).filter(|&c| !is_zero(prow[c])).collect();
            for i in j + 1..n {
                let row = &mut bottom[(i - j - 1) * n..(i - j) * n];
                let v = row[j];
                if is_zero(v) {
                    continue;
                }
                let f = v / pivot;
                row[j] = ZERO;
                for &c in &nz {
                    row[c] -= f * prow[c];
                }
                lmul[i].push((j, f));
            }
        }
        let mut lptr = vec![0];
        let mut lidx = Vec::new();
        let mut lval = Vec::new();
        for row in &lmul {
            for &(c, v) in row {
                lidx.push(c);
                lval.push(v);
            }
            lptr.push(lidx.len());
        }
        let diag = (0..n).map(|i| m.data[i * n + i]).collect();
        let mut strict_upper = m;
        for i in 0..n {
            for c in 0..=i {
                strict_upper.data[i * n + c] = ZERO;
            }
        }
        Ok(Lu {
            n,
            perm,
            lower: Csr {
                ptr: lptr,
                idx: lidx,
                val: lval,
            },
            upper: Csr::from_dense(&strict_upper),
            diag,
            norm_1,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn solve_in_place(&self, x: &mut [C64]) {
        for i in 0..self.n {
            let mut s = x[i];
            for (c, v) in self.lower.row(i) {
                s -= v * x[c];
            }
            x[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for (c, v) in self.upper.row(i) {
                s -= v * x[c];
            }
            x[i] = s / self.diag[i];
        }
    }

    pub fn solve_vec(&self, b: &[C64]) -> Result<Vec<C64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "solve with {} unknowns and rhs of {}",
                self.n,
                b.len()
            )));
        }
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        if b.rows != self.n {
            return Err(Error::DimensionMismatch(format!(
                "solve with {} unknowns and rhs of {} rows",
                self.n, b.rows
            )));
        }
        let mut out = CMatrix::zeros(self.n, b.cols);
        let mut x = vec![ZERO; self.n];
        for j in 0..b.cols {
            let mut any = false;
            for (i, &p) in self.perm.iter().enumerate() {
                x[i] = b[(p, j)];
                any |= !is_zero(x[i]);
            }
            if !any {
                continue;
            }
            self.solve_in_place(&mut x);
            for i in 0..self.n {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        self.solve(&CMatrix::identity(self.n))
    }

    /// 1-norm condition number, computed from the explicit inverse.
    pub fn condition_1(&self) -> Result<f64> {
        Ok(self.norm_1 * self.inverse()?.norm_1())
    }
}
