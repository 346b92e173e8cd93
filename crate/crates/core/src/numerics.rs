//! Dense small-matrix kernels: LU solves, the discrete algebraic Riccati
//! equation and central-difference Jacobians.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Index, IndexMut};

use crate::math;
use crate::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims("DenseMatrix::from_row_major", rows * cols, data.len()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    ///
    /// # Panics
    ///
    /// Panics if the rows have different lengths.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn column(values: &[f64]) -> Self {
        DenseMatrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// Matrix product `self * rhs`.
    ///
    /// # Panics
    ///
    /// Panics on incompatible shapes.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ x` without forming the transpose.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "tr_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        let data = self.data.iter().map(|a| a * s).collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Adds `scale * block` into the sub-matrix starting at `(row0, col0)`.
    pub fn add_block(&mut self, row0: usize, col0: usize, block: &DenseMatrix, scale: f64) {
        assert!(row0 + block.rows <= self.rows && col0 + block.cols <= self.cols);
        for i in 0..block.rows {
            let dst = &mut self.row_mut(row0 + i)[col0..col0 + block.cols];
            for (d, &b) in dst.iter_mut().zip(block.row(i)) {
                *d += scale * b;
            }
        }
    }

    /// Copies rows `rows` and columns `cols` (index lists) into a new matrix.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (oi, &i) in rows.iter().enumerate() {
            for (oj, &j) in cols.iter().enumerate() {
                out[(oi, oj)] = self[(i, j)];
            }
        }
        out
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> DenseMatrix {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = avg;
                out[(j, i)] = avg;
            }
        }
        out
    }

    /// Quadratic form `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    math::sqrt(dot(x, x))
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Relative pivot threshold for [`LuFactorization`].
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// LU factorization with partial (row) pivoting, `P A = L U`.
///
/// Elimination skips zero multipliers and only sweeps each pivot row up to its
/// last nonzero column, so the block-sparse KKT matrices of OCPs factor much
/// faster than the dense operation count suggests. Results are identical to a
/// plain dense LU.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactorization {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        Self::factor(a.clone())
    }

    /// Factors `a` in place.
    pub fn factor(mut a: DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims("LU factorization (square)", a.rows, a.cols));
        }
        if !a.is_finite() {
            return Err(Error::NonFiniteEvaluation { what: "LU factorization input" });
        }
        let n = a.rows;
        let mut col_norm2 = vec![0.0; n];
        for i in 0..n {
            for (c, &x) in col_norm2.iter_mut().zip(a.row(i)) {
                *c += x * x;
            }
        }
        let scale = col_norm2.iter().fold(0.0f64, |m, &c| m.max(c));
        let threshold = PIVOT_TOLERANCE * math::sqrt(scale);

        // One past the last nonzero column of each row.
        let mut row_end: Vec<usize> = (0..n)
            .map(|i| a.row(i).iter().rposition(|&x| x != 0.0).map_or(0, |j| j + 1))
            .collect();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let mut piv = k;
            let mut best = a[(k, k)].abs();
            for i in k + 1..n {
                let v = a[(i, k)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best <= threshold || best == 0.0 {
                return Err(Error::SingularMatrix {
                    pivot: k,
                    magnitude: best,
                });
            }
            if piv != k {
                swap_rows(&mut a, k, piv);
                perm.swap(k, piv);
                row_end.swap(k, piv);
            }
            let end = row_end[k];
            let (top, bottom) = a.data.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n..(k + 1) * n];
            let pivot = pivot_row[k];
            for (r, row) in bottom.chunks_exact_mut(n).enumerate() {
                if row[k] == 0.0 {
                    continue;
                }
                let factor = row[k] / pivot;
                row[k] = factor;
                for (x, &p) in row[k + 1..end].iter_mut().zip(&pivot_row[k + 1..end]) {
                    *x -= factor * p;
                }
                let i = k + 1 + r;
                if row_end[i] < end {
                    row_end[i] = end;
                }
            }
        }
        Ok(LuFactorization { lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::dims("LU solve right-hand side", n, b.len()));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s = dot(&row[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s = dot(&row[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.rows != self.dim() {
            return Err(Error::dims("LU solve right-hand side", self.dim(), b.rows));
        }
        let mut out = DenseMatrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let x = self.solve(&b.col(j))?;
            for (i, xi) in x.into_iter().enumerate() {
                out[(i, j)] = xi;
            }
        }
        Ok(out)
    }
}

fn swap_rows(a: &mut DenseMatrix, i: usize, j: usize) {
    let n = a.cols;
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let (first, second) = a.data.split_at_mut(hi * n);
    first[lo * n..(lo + 1) * n].swap_with_slice(&mut second[..n]);
}

/// Solves `A x = b` by LU factorization with partial pivoting.
pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.rows != b.len() {
        return Err(Error::dims("solve_linear right-hand side", a.rows, b.len()));
    }
    LuFactorization::new(a)?.solve(b)
}

/// Stabilizing solution of the discrete algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct RiccatiResult {
    /// Cost-to-go matrix.
    pub p: DenseMatrix,
    /// Feedback gain, `u = -K x`.
    pub k: DenseMatrix,
    pub iterations: usize,
    /// `‖P - Ric(P)‖∞ / max(1, ‖P‖∞)` at return.
    pub residual: f64,
}

pub const DARE_TOLERANCE: f64 = 1e-12;
pub const DARE_MAX_ITER: usize = 100_000;

/// One application of the Riccati map; returns `(Ric(P), K)`.
fn riccati_map(
    a: &DenseMatrix,
    b: &DenseMatrix,
    q: &DenseMatrix,
    r: &DenseMatrix,
    p: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let at = a.transpose();
    let bt = b.transpose();
    let pa = p.matmul(a);
    let pb = p.matmul(b);
    let gram = r.add(&bt.matmul(&pb));
    let k = LuFactorization::new(&gram)?.solve_matrix(&bt.matmul(&pa))?;
    let next = q.add(&at.matmul(&pa)).sub(&at.matmul(&pb).matmul(&k));
    Ok((next.symmetrized(), k))
}

/// Solves `P = Q + AᵀPA - AᵀPB (R + BᵀPB)⁻¹ BᵀPA` by fixed-point iteration of
/// the Riccati recursion started at `P = Q`.
///
/// Convergence is declared when the relative residual
/// `‖P - Ric(P)‖∞ / max(1, ‖P‖∞)` drops to `tol`.
pub fn solve_dare(
    a: &DenseMatrix,
    b: &DenseMatrix,
    q: &DenseMatrix,
    r: &DenseMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<RiccatiResult> {
    let n = a.rows;
    if !a.is_square() {
        return Err(Error::dims("solve_dare A (square)", a.rows, a.cols));
    }
    if b.rows != n {
        return Err(Error::dims("solve_dare B rows", n, b.rows));
    }
    if q.rows != n || q.cols != n {
        return Err(Error::dims("solve_dare Q", n, q.rows));
    }
    if r.rows != b.cols || r.cols != b.cols {
        return Err(Error::dims("solve_dare R", b.cols, r.rows));
    }
    let mut p = q.symmetrized();
    let mut residual = f64::INFINITY;
    for it in 0..=max_iter {
        let (next, k) = riccati_map(a, b, q, r, &p)?;
        residual = next.sub(&p).norm_inf() / p.norm_inf().max(1.0);
        if !residual.is_finite() {
            return Err(Error::NonFiniteEvaluation { what: "Riccati iteration" });
        }
        if residual <= tol {
            // Report the gain and residual of the returned P itself.
            return Ok(RiccatiResult {
                p,
                k,
                iterations: it,
                residual,
            });
        }
        p = next;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Relative DARE residual of an arbitrary `P`, for independent checking.
pub fn dare_residual(
    a: &DenseMatrix,
    b: &DenseMatrix,
    q: &DenseMatrix,
    r: &DenseMatrix,
    p: &DenseMatrix,
) -> Result<f64> {
    let (next, _) = riccati_map(a, b, q, r, p)?;
    Ok(next.sub(p).norm_inf() / p.norm_inf().max(1.0))
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::dims("cholesky (square)", a.rows, a.cols));
    }
    let n = a.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if !(d > 0.0) {
            return Err(Error::SingularMatrix { pivot: j, magnitude: d });
        }
        let d = math::sqrt(d);
        l[(j, j)] = d;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `Lᵀ x = y` for lower-triangular `L`.
pub fn solve_upper_transposed(l: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = y.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Default central-difference step, `1e-6 (1 + ‖at‖∞)`.
pub fn default_fd_step(at: &[f64]) -> f64 {
    1e-6 * (1.0 + norm_inf(at))
}

/// Central-difference Jacobian of `f` at `at`.
pub fn fd_jacobian<F>(mut f: F, at: &[f64], step: f64) -> Result<DenseMatrix>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut x = at.to_vec();
    let mut jac: Option<DenseMatrix> = None;
    for j in 0..at.len() {
        // Divide by the representable step so affine maps come out exact.
        let (hi, lo) = (at[j] + step, at[j] - step);
        x[j] = hi;
        let plus = f(&x);
        x[j] = lo;
        let minus = f(&x);
        x[j] = at[j];
        if plus.iter().chain(&minus).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEvaluation { what: "fd_jacobian callback" });
        }
        if plus.len() != minus.len() {
            return Err(Error::dims("fd_jacobian output", plus.len(), minus.len()));
        }
        let jac = jac.get_or_insert_with(|| DenseMatrix::zeros(plus.len(), at.len()));
        if jac.rows != plus.len() {
            return Err(Error::dims("fd_jacobian output", jac.rows, plus.len()));
        }
        for i in 0..plus.len() {
            jac[(i, j)] = (plus[i] - minus[i]) / (hi - lo);
        }
    }
    match jac {
        Some(j) => Ok(j),
        None => {
            let out = f(at);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteEvaluation { what: "fd_jacobian callback" });
            }
            Ok(DenseMatrix::zeros(out.len(), 0))
        }
    }
}

/// Entrywise comparison of an analytic matrix against a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixDiscrepancy {
    pub max_abs_error: f64,
    /// Largest `error / max(atol, rtol |reference|)`; `<= 1` means within tolerance.
    pub worst_ratio: f64,
    pub worst_entry: (usize, usize),
}

impl MatrixDiscrepancy {
    pub fn passes(&self) -> bool {
        self.worst_ratio <= 1.0
    }
}

/// Compares `analytic` to `reference` with tolerance `max(atol, rtol |ref_ij|)`.
pub fn compare_matrices(
    analytic: &DenseMatrix,
    reference: &DenseMatrix,
    atol: f64,
    rtol: f64,
) -> Result<MatrixDiscrepancy> {
    if analytic.rows != reference.rows || analytic.cols != reference.cols {
        return Err(Error::dims(
            "compare_matrices",
            reference.rows * reference.cols,
            analytic.rows * analytic.cols,
        ));
    }
    let mut out = MatrixDiscrepancy {
        max_abs_error: 0.0,
        worst_ratio: 0.0,
        worst_entry: (0, 0),
    };
    for i in 0..analytic.rows {
        for j in 0..analytic.cols {
            let a = analytic[(i, j)];
            let r = reference[(i, j)];
            let err = (a - r).abs();
            let ratio = if err.is_nan() {
                f64::INFINITY
            } else {
                err / atol.max(rtol * r.abs())
            };
            out.max_abs_error = out.max_abs_error.max(err);
            if ratio > out.worst_ratio {
                out.worst_ratio = ratio;
                out.worst_entry = (i, j);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_identity() {
        let x = solve_linear(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn solve_diagonal() {
        let a = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]);
        assert_eq!(solve_linear(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn solve_permutation_needs_pivoting() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(solve_linear(&a, &[5.0, 7.0]).unwrap(), vec![7.0, 5.0]);
    }

    #[test]
    fn singular_is_reported() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(
            solve_linear(&a, &[1.0, 1.0]),
            Err(Error::SingularMatrix { pivot: 1, .. })
        ));
        let z = DenseMatrix::zeros(2, 2);
        assert!(matches!(solve_linear(&z, &[0.0, 0.0]), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn solve_rejects_bad_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(solve_linear(&a, &[1.0, 1.0]), Err(Error::DimensionMismatch { .. })));
        let a = DenseMatrix::identity(2);
        assert!(matches!(solve_linear(&a, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn dare_scalar_golden_ratio() {
        let one = DenseMatrix::identity(1);
        let res = solve_dare(&one, &one, &one, &one, DARE_TOLERANCE, DARE_MAX_ITER).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((res.p[(0, 0)] - golden).abs() < 1e-9);
        // K = P / (1 + P) = 1 / golden
        assert!((res.k[(0, 0)] - 1.0 / golden).abs() < 1e-9);
    }

    #[test]
    fn dare_zero_dynamics_gives_q() {
        let a = DenseMatrix::zeros(2, 2);
        let b = DenseMatrix::from_rows(&[[1.0], [3.0]]);
        let q = DenseMatrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]);
        let r = DenseMatrix::identity(1);
        let res = solve_dare(&a, &b, &q, &r, DARE_TOLERANCE, DARE_MAX_ITER).unwrap();
        assert_eq!(res.p, q);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn dare_iteration_cap() {
        let one = DenseMatrix::identity(1);
        assert!(matches!(
            solve_dare(&one, &one, &one, &one, 0.0, 3),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
    }

    #[test]
    fn fd_identity() {
        let j = fd_jacobian(|x| x.to_vec(), &[0.3, -2.0, 5.0], 1e-6).unwrap();
        assert!(compare_matrices(&j, &DenseMatrix::identity(3), 1e-10, 0.0)
            .unwrap()
            .passes());
    }

    #[test]
    fn fd_hand_differentiated() {
        let j = fd_jacobian(|x| vec![x[0] * x[0], x[0] * x[1]], &[1.0, 1.0], 1e-5).unwrap();
        let expected = DenseMatrix::from_rows(&[[2.0, 0.0], [1.0, 1.0]]);
        assert!(compare_matrices(&j, &expected, 1e-8, 0.0).unwrap().passes());
    }

    #[test]
    fn fd_affine_is_exact() {
        let m = DenseMatrix::from_rows(&[[1.0, -2.0], [0.5, 4.0], [3.0, 0.0]]);
        let c = [1.0, 2.0, 3.0];
        let at = [0.25, -0.75];
        let j = fd_jacobian(
            |x| m.matvec(x).iter().zip(&c).map(|(a, b)| a + b).collect(),
            &at,
            default_fd_step(&at),
        )
        .unwrap();
        assert!(compare_matrices(&j, &m, 1e-9, 0.0).unwrap().passes());
    }

    #[test]
    fn fd_non_finite() {
        let r = fd_jacobian(|x| vec![1.0 / x[0]], &[0.0], 0.0);
        assert!(matches!(r, Err(Error::NonFiniteEvaluation { .. })));
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        assert!(l.matmul(&l.transpose()).sub(&a).max_abs() < 1e-14);
        let x = solve_upper_transposed(&l, &[1.0, 2.0]);
        assert!(compare_matrices(
            &DenseMatrix::column(&l.transpose().matvec(&x)),
            &DenseMatrix::column(&[1.0, 2.0]),
            1e-14,
            0.0
        )
        .unwrap()
        .passes());
        assert!(cholesky(&DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]])).is_err());
    }

    #[test]
    fn matrix_helpers() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(a.transpose().row(0), &[1.0, 3.0]);
        assert_eq!(a.matvec(&[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(a.tr_matvec(&[1.0, 1.0]), vec![4.0, 6.0]);
        assert_eq!(a.norm_inf(), 7.0);
        assert_eq!(a.quad_form(&[1.0, 1.0]), 10.0);
        let mut z = DenseMatrix::zeros(3, 3);
        z.add_block(1, 1, &a, 2.0);
        assert_eq!(z[(2, 2)], 8.0);
        assert_eq!(a.select(&[1], &[0, 1]).row(0), &[3.0, 4.0]);
    }
}
