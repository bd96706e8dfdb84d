use crate::linalg::DenseMatrix;
use crate::scalar::{dot, Scalar};

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Assembles from `(row, col, value)` triplets, summing duplicates.
    ///
    /// Duplicates are summed in the order they appear, so the result does not
    /// depend on anything but the triplet sequence.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, _) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of range");
            counts[r + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut slots = counts.clone();
        let mut by_row = vec![(0usize, T::zero()); triplets.len()];
        for &(r, c, v) in triplets {
            by_row[slots[r]] = (c, v);
            slots[r] += 1;
        }
        let mut offsets = Vec::with_capacity(n_rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        offsets.push(0);
        for r in 0..n_rows {
            let row = &mut by_row[counts[r]..counts[r + 1]];
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in row.iter() {
                if indices.len() > offsets[r] && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            offsets.push(indices.len());
        }
        SparseMatrix {
            n_rows,
            n_cols,
            offsets,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![T::one(); n])
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let t: Vec<_> = diag.iter().enumerate().map(|(i, d)| (i, i, *d)).collect();
        Self::from_triplets(diag.len(), diag.len(), &t)
    }

    pub fn from_dense(a: &DenseMatrix<T>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                if a[(i, j)] != T::zero() {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.rows(), a.cols(), &t)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (c, v) in cols.iter().zip(vals) {
                acc += *v * x[*c];
            }
            *yi = acc;
        }
    }

    /// `xᵀ·A·x`.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        dot(x, &self.matvec(x))
    }

    /// Principal submatrix on `keep` (indices into rows/cols, in the given order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        assert_eq!(self.n_rows, self.n_cols);
        let mut local = vec![usize::MAX; self.n_cols];
        for (k, &g) in keep.iter().enumerate() {
            local[g] = k;
        }
        let mut t = Vec::new();
        for (k, &g) in keep.iter().enumerate() {
            let (cols, vals) = self.row(g);
            for (c, v) in cols.iter().zip(vals) {
                if local[*c] != usize::MAX {
                    t.push((k, local[*c], *v));
                }
            }
        }
        Self::from_triplets(keep.len(), keep.len(), &t)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                t.push((*c, i, *v));
            }
        }
        Self::from_triplets(self.n_cols, self.n_rows, &t)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                d[(i, *c)] = *v;
            }
        }
        d
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|i| {
                let (cols, _) = self.row(i);
                cols.iter().all(|&j| self.row(j).0.binary_search(&i).is_ok())
            })
    }

    /// Largest |A_ij − A_ji|.
    pub fn asymmetry(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                m = m.max((*v - self.get(*c, i)).abs());
            }
        }
        m
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> T {
        (0..self.n_rows)
            .map(|i| self.row(i).1.iter().copied().sum::<T>().abs())
            .fold(T::zero(), T::max)
    }
}
