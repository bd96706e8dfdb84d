//! Dense symmetric and symmetric-definite generalized eigenproblems.
//!
//! The standard problem is reduced to tridiagonal form by Householder
//! reflections and diagonalized by the implicit QL method with Wilkinson
//! shifts (the EISPACK `tred2`/`tql2` pair). The generalized pencil
//! `A·x = λ·B·x` is reduced through `B = L·Lᵀ` to `L⁻¹·A·L⁻ᵀ`.

use crate::error::{Error, Result};
use crate::linalg::{DenseCholesky, DenseMatrix};
use crate::scalar::Scalar;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 60;

/// Eigenvalues in ascending order with eigenvectors stored as matrix columns.
#[derive(Debug, Clone)]
pub struct EigenPairs<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
}

impl<T: Scalar> EigenPairs<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        self.vectors.column(k)
    }
}

/// All eigenpairs of a symmetric matrix, ascending; eigenvectors orthonormal.
pub fn symmetric_eig<T: Scalar>(a: &DenseMatrix<T>) -> Result<EigenPairs<T>> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::InvalidArgument("eigenproblem of a non-square matrix".into()));
    }
    if n == 0 {
        return Ok(EigenPairs {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(0, 0),
        });
    }
    let mut v = a.clone();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    // Row k of `vt` is the k-th eigenvector; keeps rotations contiguous.
    let mut vt = v.transpose();
    tridiagonal_ql(&mut vt, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).expect("finite eigenvalues").then(x.cmp(&y)));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for (row, x) in vt.row(k).iter().enumerate() {
            vectors[(row, col)] = *x;
        }
    }
    Ok(EigenPairs { values, vectors })
}

/// The `k` smallest eigenpairs of `A·x = λ·B·x`, vectors `B`-orthonormal.
pub fn generalized_symmetric_eig<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    k: usize,
) -> Result<EigenPairs<T>> {
    let n = a.rows();
    if !a.is_square() || !b.is_square() || b.rows() != n {
        return Err(Error::InvalidArgument(format!(
            "pencil dimensions {}x{} / {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "requested {k} eigenpairs of a {n}x{n} pencil"
        )));
    }
    let sym_tol = T::of(1e-10).max(T::epsilon() * T::of(100.0));
    if !a.is_symmetric(sym_tol) {
        return Err(Error::InvalidArgument("left matrix of the pencil is not symmetric".into()));
    }
    let chol = DenseCholesky::new(b)?;

    // C = L⁻¹ A L⁻ᵀ: first W = L⁻¹ A (column solves), then C = L⁻¹ Wᵀ.
    let mut w = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut col = a.column(j);
        chol.forward(&mut col);
        w.set_column(j, &col);
    }
    let mut c = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut col = w.row(j).to_vec();
        chol.forward(&mut col);
        c.set_column(j, &col);
    }
    c.symmetrize();

    let full = symmetric_eig(&c)?;
    let mut vectors = DenseMatrix::zeros(n, k);
    for j in 0..k {
        let mut y = full.vector(j);
        chol.backward(&mut y);
        vectors.set_column(j, &y);
    }
    Ok(EigenPairs {
        values: full.values[..k].to_vec(),
        vectors,
    })
}

/// Householder reduction to tridiagonal form, accumulating the transformation in `v`.
fn tridiagonalize<T: Scalar>(v: &mut DenseMatrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
                v[(j, i)] = T::zero();
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = T::zero();
            }
            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[(k, j)] -= upd;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[(k, j)] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = T::zero();
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

/// Implicit QL on the tridiagonal (d, e); `vt` holds eigenvectors as rows.
fn tridiagonal_ql<T: Scalar>(vt: &mut DenseMatrix<T>, d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let two = T::of(2.0);
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(Error::NoConvergence {
                        iterations: sweeps,
                        residual: e[l].abs().as_f64(),
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[(l + 2)..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (upper, lower) = vt.adjacent_rows_mut(i);
                    for (vi, vi1) in upper.iter_mut().zip(lower.iter_mut()) {
                        let hk = *vi1;
                        *vi1 = s * *vi + c * hk;
                        *vi = c * *vi - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}
