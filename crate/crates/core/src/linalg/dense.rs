use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "dimension mismatch");
        DenseMatrix { rows, cols, data }
    }

    /// Builds from nested rows given as `f64` literals.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r.iter().map(|&x| T::of(x)));
        }
        DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, v) in c.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Rows `i` and `i + 1`, both mutable.
    pub fn adjacent_rows_mut(&mut self, i: usize) -> (&mut [T], &mut [T]) {
        let c = self.cols;
        let (a, b) = self.data[i * c..(i + 2) * c].split_at_mut(c);
        (a, b)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        assert_eq!(values.len(), self.rows);
        for (i, v) in values.iter().enumerate() {
            self[(i, j)] = *v;
        }
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

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · x`.
    pub fn matvec_transpose(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![T::zero(); self.cols];
        for (i, xi) in x.iter().enumerate() {
            if *xi == T::zero() {
                continue;
            }
            for (yj, aij) in y.iter_mut().zip(self.row(i)) {
                *yj += *aij * *xi;
            }
        }
        y
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * *b;
                }
            }
        }
        out
    }

    pub fn scale(&mut self, alpha: T) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect();
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        crate::scalar::max_abs(&self.data)
    }

    /// Induced ∞-norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |s, x| s + x.abs()))
            .fold(T::zero(), T::max)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// ‖A − Aᵀ‖_∞ ≤ tol·‖A‖_∞.
    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        if !self.is_square() {
            return false;
        }
        let mut asym = T::zero();
        for i in 0..self.rows {
            let mut row = T::zero();
            for j in 0..self.cols {
                row += (self[(i, j)] - self[(j, i)]).abs();
            }
            asym = asym.max(row);
        }
        asym <= rel_tol * self.norm_inf()
    }

    /// Replaces the matrix by ½(A + Aᵀ).
    pub fn symmetrize(&mut self) {
        let half = T::of(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = half * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Below this order the factorization runs serially.
const PARALLEL_CHOLESKY_MIN: usize = 256;

/// Lower-triangular Cholesky factor `A = L·Lᵀ` of a dense SPD matrix.
///
/// A deflated factor skips rows that depend on earlier ones; solves then
/// return zero in those positions.
#[derive(Debug, Clone)]
pub struct DenseCholesky<T> {
    l: DenseMatrix<T>,
    dropped: Vec<bool>,
}

/// Pivots below this multiple of the largest diagonal entry count as indefinite.
const NEGATIVE_PIVOT_TOL: f64 = 1e-8;

impl<T: Scalar> DenseCholesky<T> {
    /// Factors `a`; a pivot ≤ 1e-14·max diagonal is reported as `NotPositiveDefinite`.
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        Self::factorize(a, None)
    }

    /// Factors a positive semidefinite `a`, dropping every row whose pivot
    /// is at most `rel_tol`·max diagonal. Clearly negative pivots are still
    /// reported as `NotPositiveDefinite`.
    pub fn new_deflated(a: &DenseMatrix<T>, rel_tol: T) -> Result<Self> {
        Self::factorize(a, Some(rel_tol))
    }

    fn factorize(a: &DenseMatrix<T>, deflate: Option<T>) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() {
            return Err(Error::InvalidArgument("cholesky of a non-square matrix".into()));
        }
        let max_diag = (0..n).map(|i| a[(i, i)].abs()).fold(T::zero(), T::max);
        let tol = deflate.unwrap_or(T::of(1e-14)) * max_diag;
        let negative = -T::of(NEGATIVE_PIVOT_TOL) * max_diag;
        let mut dropped = vec![false; n];
        let mut l = DenseMatrix::zeros(n, n);
        // Lower triangle copied; row i of l holds L[i][0..=i].
        for i in 0..n {
            for j in 0..=i {
                l[(i, j)] = a[(i, j)];
            }
        }
        for j in 0..n {
            let (head, tail) = l.data.split_at_mut((j + 1) * n);
            let row_j = &mut head[j * n..(j + 1) * n];
            let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
            if !(d > tol) {
                if deflate.is_none() || !(d >= negative) || !(max_diag > T::zero()) {
                    return Err(Error::NotPositiveDefinite {
                        row: j,
                        pivot: d.as_f64(),
                    });
                }
                dropped[j] = true;
                row_j[..j].iter_mut().for_each(|v| *v = T::zero());
                row_j[j] = T::one();
                tail.chunks_mut(n).for_each(|row_i| row_i[j] = T::zero());
                continue;
            }
            let djj = d.sqrt();
            row_j[j] = djj;
            let row_j: &[T] = row_j;
            let update = |row_i: &mut [T]| {
                let s = row_i[j] - dot(&row_i[..j], &row_j[..j]);
                row_i[j] = s / djj;
            };
            if n - j > PARALLEL_CHOLESKY_MIN {
                tail.par_chunks_mut(n).for_each(update);
            } else {
                tail.chunks_mut(n).for_each(update);
            }
        }
        Ok(DenseCholesky { l, dropped })
    }

    /// Rows skipped as dependent (always empty for [`DenseCholesky::new`]).
    pub fn dropped(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.dropped[i]).collect()
    }

    pub fn is_dropped(&self, i: usize) -> bool {
        self.dropped[i]
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor(&self) -> &DenseMatrix<T> {
        &self.l
    }

    /// Solves `L·y = b` in place.
    pub fn forward(&self, b: &mut [T]) {
        let n = self.dim();
        for i in 0..n {
            if self.dropped[i] {
                b[i] = T::zero();
                continue;
            }
            let row = self.l.row(i);
            b[i] = (b[i] - dot(&row[..i], &b[..i])) / row[i];
        }
    }

    /// Solves `Lᵀ·x = y` in place.
    pub fn backward(&self, y: &mut [T]) {
        let n = self.dim();
        for i in (0..n).rev() {
            if self.dropped[i] {
                y[i] = T::zero();
                continue;
            }
            let xi = y[i] / self.l[(i, i)];
            y[i] = xi;
            let row = self.l.row(i);
            for k in 0..i {
                y[k] -= row[k] * xi;
            }
        }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.dim());
        self.forward(b);
        self.backward(b);
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_matrix(&self, b: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(b.rows(), self.dim());
        let mut x = DenseMatrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let col = self.solve(&b.column(j));
            x.set_column(j, &col);
        }
        x
    }
}

/// Solves `A·X = B` for symmetric positive-definite `A`.
pub fn cholesky_solve<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    Ok(DenseCholesky::new(a)?.solve_matrix(b))
}
