//! Envelope (profile) Cholesky factorization for sparse SPD matrices.
//!
//! Unknowns are reordered by reverse Cuthill–McKee so that the envelope of a
//! 2-D finite element matrix has width of order √n. Fill stays inside the
//! envelope, so storage is `Σ_i (i − first_i + 1)`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::scalar::{dot, Scalar};

/// Sparse SPD factorization `P·A·Pᵀ = L·Lᵀ` with `L` stored by rows over its envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky<T> {
    /// `perm[k]` = original index placed at position `k`.
    perm: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> EnvelopeCholesky<T> {
    /// Factors `a`; a pivot ≤ 1e-14·max diagonal is reported as `NotPositiveDefinite`.
    pub fn new(a: &SparseMatrix<T>) -> Result<Self> {
        let n = a.n_rows();
        if n != a.n_cols() {
            return Err(Error::InvalidArgument("cholesky of a non-square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (k, &p) in perm.iter().enumerate() {
            let (cols, _) = a.row(p);
            for &c in cols {
                let kc = inv[c];
                if kc < first[k] {
                    first[k] = kc;
                }
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for k in 0..n {
            row_start.push(row_start[k] + (k - first[k] + 1));
        }
        let mut values = vec![T::zero(); row_start[n]];
        let mut max_diag = T::zero();
        for (k, &p) in perm.iter().enumerate() {
            let (cols, vals) = a.row(p);
            for (c, v) in cols.iter().zip(vals) {
                let kc = inv[*c];
                if kc <= k {
                    values[row_start[k] + kc - first[k]] += *v;
                }
                if kc == k {
                    max_diag = max_diag.max(v.abs());
                }
            }
        }
        let tol = T::of(1e-14) * max_diag;

        for i in 0..n {
            let fi = first[i];
            let si = row_start[i];
            for j in fi..i {
                let fj = first[j];
                let sj = row_start[j];
                let lo = fi.max(fj);
                let s = dot(
                    &values[si + lo - fi..si + j - fi],
                    &values[sj + lo - fj..sj + j - fj],
                );
                let ljj = values[sj + j - fj];
                let e = &mut values[si + j - fi];
                *e = (*e - s) / ljj;
            }
            let row = &values[si..si + i - fi];
            let d = values[si + i - fi] - dot(row, row);
            if !(d > tol) {
                return Err(Error::NotPositiveDefinite {
                    row: perm[i],
                    pivot: d.as_f64(),
                });
            }
            values[si + i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky {
            perm,
            first,
            row_start,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.row_start[i];
            let row = &self.values[si..si + i - fi];
            y[i] = (y[i] - dot(row, &y[fi..i])) / self.values[si + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.row_start[i];
            let xi = y[i] / self.values[si + i - fi];
            y[i] = xi;
            for (yk, l) in y[fi..i].iter_mut().zip(&self.values[si..si + i - fi]) {
                *yk -= *l * xi;
            }
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = y[k];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Reverse Cuthill–McKee ordering of the symmetric sparsity pattern of `a`.
///
/// Each connected component starts from a pseudo-peripheral vertex found by
/// repeated BFS from a minimum-degree vertex.
pub fn reverse_cuthill_mckee<T: Scalar>(a: &SparseMatrix<T>) -> Vec<usize> {
    let n = a.n_rows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    let mut level = vec![usize::MAX; n];

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed, &degree, &visited, &mut level);
        let mut queue = VecDeque::new();
        queue.push_back(start);
        visited[start] = true;
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).0.iter().copied().filter(|&u| !visited[u]));
            nbrs.sort_by_key(|&u| (degree[u], u));
            for &u in &nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral<T: Scalar>(
    a: &SparseMatrix<T>,
    seed: usize,
    degree: &[usize],
    blocked: &[bool],
    level: &mut [usize],
) -> usize {
    let mut root = seed;
    let mut depth = 0;
    for _ in 0..8 {
        let (last_level, d) = bfs_levels(a, root, blocked, level);
        if d <= depth && root != seed {
            break;
        }
        depth = d;
        let next = last_level
            .into_iter()
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(root);
        if next == root {
            break;
        }
        root = next;
    }
    root
}

fn bfs_levels<T: Scalar>(
    a: &SparseMatrix<T>,
    root: usize,
    blocked: &[bool],
    level: &mut [usize],
) -> (Vec<usize>, usize) {
    let mut touched = vec![root];
    level[root] = 0;
    let mut frontier = vec![root];
    let mut depth = 0;
    loop {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in a.row(v).0 {
                if !blocked[u] && level[u] == usize::MAX {
                    level[u] = depth + 1;
                    touched.push(u);
                    next.push(u);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        depth += 1;
        frontier = next;
    }
    for v in touched {
        level[v] = usize::MAX;
    }
    (frontier, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{DenseCholesky, DenseMatrix};

    fn laplacian_5pt(m: usize) -> SparseMatrix<f64> {
        let mut t = Vec::new();
        let id = |i: usize, j: usize| i * m + j;
        for i in 0..m {
            for j in 0..m {
                t.push((id(i, j), id(i, j), 4.0));
                if i > 0 {
                    t.push((id(i, j), id(i - 1, j), -1.0));
                }
                if i + 1 < m {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                }
                if j > 0 {
                    t.push((id(i, j), id(i, j - 1), -1.0));
                }
                if j + 1 < m {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                }
            }
        }
        SparseMatrix::from_triplets(m * m, m * m, &t)
    }

    #[test]
    fn matches_dense_cholesky() {
        let a = laplacian_5pt(9);
        let b: Vec<f64> = (0..81).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let xs = EnvelopeCholesky::new(&a).unwrap().solve(&b);
        let xd = DenseCholesky::new(&a.to_dense()).unwrap().solve(&b);
        for (p, q) in xs.iter().zip(&xd) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn rcm_is_a_permutation_with_small_envelope() {
        let a = laplacian_5pt(20);
        let mut p = reverse_cuthill_mckee(&a);
        let f = EnvelopeCholesky::new(&a).unwrap();
        assert!(f.envelope_size() < 400 * 25);
        p.sort_unstable();
        assert_eq!(p, (0..400).collect::<Vec<_>>());
    }

    #[test]
    fn disconnected_pattern_is_handled() {
        let a = SparseMatrix::from_diagonal(&[2.0, 3.0, 4.0]);
        let x: Vec<f64> = EnvelopeCholesky::new(&a).unwrap().solve(&[2.0, 3.0, 4.0]);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_indefinite() {
        let d = DenseMatrix::<f64>::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            EnvelopeCholesky::new(&SparseMatrix::from_dense(&d)),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
