//! Constraint-energy-minimizing multiscale basis functions.
//!
//! On a patch `K_{i,m}` with free unknowns `V_0(K_{i,m})`, let `A` be the
//! patch stiffness and `C` the matrix whose columns are the weighted
//! auxiliary functions `S_k·φ_k` of every block in the patch. With
//! `X = A⁻¹·C` and `M = Cᵀ·X`:
//!
//! * the constraint basis minimizes `a(ψ, ψ)` subject to `Cᵀ·ψ = e_(i,j)`,
//!   giving `ψ = X·M⁻¹·e_(i,j)`;
//! * the relaxed basis solves `(A + C·Cᵀ)·ψ = C·e_(i,j)`, which by the
//!   Woodbury identity is `ψ = X·(I + M)⁻¹·e_(i,j)`.
//!
//! Both share one sparse factorization of `A` per patch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse::{CoarseGrid, OversampleRegion};
use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, DofMap, ScalarField};
use crate::geometry::TriMesh;
use crate::linalg::{DenseCholesky, DenseMatrix, EnvelopeCholesky, SparseMatrix};
use crate::scalar::Scalar;
use crate::spectral::AuxSpace;

/// Relative pivot size below which constraints count as dependent.
const PIVOT_TOL: f64 = 1e-12;
/// Largest violation tolerated on a constraint dropped as dependent.
const DROPPED_CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Constraint,
    Relaxed,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Constraint => "constraint",
            Variant::Relaxed => "relaxed",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constraint" => Ok(Variant::Constraint),
            "relaxed" => Ok(Variant::Relaxed),
            other => Err(Error::InvalidArgument(format!("unknown variant '{other}'"))),
        }
    }
}

/// A basis row with its free-dof columns and values.
type SparseRow<T> = (BasisRow, Vec<usize>, Vec<T>);

/// Oversampling of a basis function: `m` layers, or the whole domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Support {
    Layers(usize),
    Global,
}

/// One multiscale basis function as a field on all mesh nodes.
#[derive(Debug, Clone)]
pub struct MsBasisFunction<T> {
    pub block: usize,
    pub eig: usize,
    pub support: Support,
    pub variant: Variant,
    pub coefficients: ScalarField<T>,
}

/// Shared read-only data for basis construction.
#[derive(Debug)]
pub struct BasisBuilder<'a, T> {
    pub mesh: &'a TriMesh<T>,
    pub grid: &'a CoarseGrid<T>,
    pub aux: &'a AuxSpace<T>,
    stiffness: SparseMatrix<T>,
    dof_map: DofMap,
}

impl<'a, T: Scalar> BasisBuilder<'a, T> {
    pub fn new(mesh: &'a TriMesh<T>, grid: &'a CoarseGrid<T>, aux: &'a AuxSpace<T>) -> Result<Self> {
        Ok(BasisBuilder {
            mesh,
            grid,
            aux,
            stiffness: assemble_stiffness(mesh)?,
            dof_map: DofMap::new(mesh),
        })
    }

    /// Stiffness over all mesh nodes.
    pub fn stiffness(&self) -> &SparseMatrix<T> {
        &self.stiffness
    }

    pub fn dof_map(&self) -> &DofMap {
        &self.dof_map
    }

    /// Layer count that makes every patch the whole domain.
    pub fn saturating_layers(&self) -> usize {
        self.grid.blocks_per_side()
    }

    fn layers_of(&self, support: Support) -> usize {
        match support {
            Support::Layers(m) => m,
            Support::Global => self.saturating_layers(),
        }
    }

    pub fn patch(&self, block: usize, support: Support) -> Result<PatchSystem<T>> {
        PatchSystem::new(self, block, self.layers_of(support))
    }

    /// `ψ^i_j` on `K_{i,m}` (or globally) for either variant.
    pub fn build(&self, block: usize, eig: usize, support: Support, variant: Variant) -> Result<MsBasisFunction<T>> {
        let patch = self.patch(block, support)?;
        let local = patch.solve(eig, variant)?;
        Ok(MsBasisFunction {
            block,
            eig,
            support,
            variant,
            coefficients: patch.to_field(&local, self.mesh.n_nodes()),
        })
    }

    pub fn build_constraint_basis(&self, block: usize, eig: usize, layers: usize) -> Result<MsBasisFunction<T>> {
        self.build(block, eig, Support::Layers(layers), Variant::Constraint)
    }

    pub fn build_relaxed_basis(&self, block: usize, eig: usize, layers: usize) -> Result<MsBasisFunction<T>> {
        self.build(block, eig, Support::Layers(layers), Variant::Relaxed)
    }

    /// Global basis over the whole fine space; one dense column per
    /// auxiliary function is stored, so keep this to small meshes.
    pub fn build_global_basis(&self, block: usize, eig: usize, variant: Variant) -> Result<MsBasisFunction<T>> {
        self.build(block, eig, Support::Global, variant)
    }

    /// `‖ψ_glo − ψ_m‖_a` for each `m` in `layers`.
    pub fn decay_profile(&self, block: usize, eig: usize, variant: Variant, layers: &[usize]) -> Result<Vec<(usize, T)>> {
        let global = self.build_global_basis(block, eig, variant)?;
        layers
            .iter()
            .map(|&m| {
                let local = self.build(block, eig, Support::Layers(m), variant)?;
                let diff = global.coefficients.sub(&local.coefficients);
                Ok((m, self.energy(&diff)))
            })
            .collect()
    }

    pub fn energy(&self, u: &ScalarField<T>) -> T {
        self.stiffness.quadratic_form(u.values()).max(T::zero()).sqrt()
    }
}

/// Factorized saddle data of one oversampled patch.
#[derive(Debug)]
pub struct PatchSystem<T> {
    region: OversampleRegion,
    /// Global auxiliary indices of the constraints; the patch owner's come first.
    constraints: Vec<usize>,
    n_own: usize,
    /// Sparse constraint columns over patch unknowns.
    columns: Vec<Vec<(usize, T)>>,
    /// `A⁻¹·c_k`, one dense column per constraint.
    x: Vec<Vec<T>>,
    m: DenseMatrix<T>,
}

impl<T: Scalar> PatchSystem<T> {
    pub fn new(builder: &BasisBuilder<'_, T>, block: usize, layers: usize) -> Result<Self> {
        let region = builder.grid.oversample(block, layers)?;
        let free = &region.free_nodes;
        let aux = builder.aux;

        let mut order = vec![block];
        order.extend(region.blocks.iter().copied().filter(|&b| b != block));
        let mut constraints = Vec::new();
        let mut columns = Vec::new();
        for &b in &order {
            let Some(ab) = aux.block(b) else { continue };
            for (j, w) in ab.weighted.iter().enumerate() {
                let col: Vec<(usize, T)> = ab
                    .nodes
                    .iter()
                    .zip(w)
                    .filter_map(|(node, val)| free.binary_search(node).ok().map(|k| (k, *val)))
                    .collect();
                constraints.push(ab.offset + j);
                columns.push(col);
            }
        }
        let n_own = aux.block(block).map_or(0, |b| b.len());

        let n = free.len();
        let (x, m) = if n == 0 {
            let nc = columns.len();
            (vec![Vec::new(); nc], DenseMatrix::zeros(nc, nc))
        } else {
            let a = builder.stiffness.principal_submatrix(free);
            let chol = EnvelopeCholesky::new(&a)?;
            let x: Vec<Vec<T>> = columns
                .iter()
                .map(|col| {
                    let mut rhs = vec![T::zero(); n];
                    for &(k, v) in col {
                        rhs[k] = v;
                    }
                    chol.solve_in_place(&mut rhs);
                    rhs
                })
                .collect();
            let nc = columns.len();
            let mut m = DenseMatrix::zeros(nc, nc);
            for p in 0..nc {
                for q in 0..nc {
                    m[(p, q)] = columns[p].iter().map(|&(k, v)| v * x[q][k]).sum();
                }
            }
            m.symmetrize();
            (x, m)
        };
        Ok(PatchSystem {
            region,
            constraints,
            n_own,
            columns,
            x,
            m,
        })
    }

    pub fn region(&self) -> &OversampleRegion {
        &self.region
    }

    /// Global auxiliary indices constrained on this patch.
    pub fn constraints(&self) -> &[usize] {
        &self.constraints
    }

    pub fn n_free(&self) -> usize {
        self.region.free_nodes.len()
    }

    /// `Cᵀ·v` for a vector over patch unknowns.
    pub fn constraint_values(&self, v: &[T]) -> Vec<T> {
        self.columns.iter().map(|c| c.iter().map(|&(k, w)| w * v[k]).sum()).collect()
    }

    /// Constraint column `k` as a dense vector over patch unknowns.
    pub fn column(&self, k: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_free()];
        for &(r, v) in &self.columns[k] {
            out[r] = v;
        }
        out
    }

    fn combine(&self, weights: &[T], kept: &[usize]) -> Vec<T> {
        let mut psi = vec![T::zero(); self.n_free()];
        for (w, &k) in weights.iter().zip(kept) {
            for (p, x) in psi.iter_mut().zip(&self.x[k]) {
                *p += *w * *x;
            }
        }
        psi
    }

    /// Patch coefficients of `ψ^i_j` for the given variant.
    pub fn solve(&self, eig: usize, variant: Variant) -> Result<Vec<T>> {
        if eig >= self.n_own {
            return Err(Error::InvalidArgument(format!(
                "eigen index {eig} out of range for block {} ({} auxiliary functions)",
                self.region.block, self.n_own
            )));
        }
        match variant {
            Variant::Constraint => self.solve_constraint(eig),
            Variant::Relaxed => self.solve_relaxed(eig),
        }
    }

    fn solve_relaxed(&self, eig: usize) -> Result<Vec<T>> {
        let nc = self.constraints.len();
        let shifted = self.m.add(&DenseMatrix::identity(nc));
        let mut y = vec![T::zero(); nc];
        y[eig] = T::one();
        DenseCholesky::new(&shifted)?.solve_in_place(&mut y);
        let all: Vec<usize> = (0..nc).collect();
        Ok(self.combine(&y, &all))
    }

    fn solve_constraint(&self, eig: usize) -> Result<Vec<T>> {
        // Dependent constraints of other blocks are dropped; the owner's must stay.
        let chol = DenseCholesky::new_deflated(&self.m, T::of(PIVOT_TOL))?;
        if let Some(&k) = chol.dropped().iter().find(|&&k| k < self.n_own) {
            return Err(Error::SingularConstraintBlock {
                block: self.region.block,
                eig: k,
            });
        }
        let mut y = vec![T::zero(); self.constraints.len()];
        y[eig] = T::one();
        chol.solve_in_place(&mut y);
        let all: Vec<usize> = (0..self.constraints.len()).collect();
        let psi = self.combine(&y, &all);
        let values = self.constraint_values(&psi);
        for k in chol.dropped() {
            if values[k].abs() > T::of(DROPPED_CONSTRAINT_TOL) {
                return Err(Error::SingularConstraintBlock {
                    block: self.region.block,
                    eig,
                });
            }
        }
        Ok(psi)
    }

    /// Extends patch coefficients by zero to all mesh nodes.
    pub fn to_field(&self, local: &[T], n_nodes: usize) -> ScalarField<T> {
        let mut out = ScalarField::zeros(n_nodes);
        for (&node, v) in self.region.free_nodes.iter().zip(local) {
            out.0[node] = *v;
        }
        out
    }
}

/// Oversampling layers for each block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerRule {
    Uniform(usize),
    /// One entry per coarse block (lattice order); entries of empty blocks are ignored.
    PerBlock(Vec<usize>),
}

impl LayerRule {
    pub fn layers(&self, block: usize) -> usize {
        match self {
            LayerRule::Uniform(m) => *m,
            LayerRule::PerBlock(v) => v[block],
        }
    }
}

/// Metadata of one row of `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BasisRow {
    pub block: usize,
    pub eig: usize,
    pub layers: usize,
}

/// All multiscale basis functions as the rows of `R` over free fine unknowns.
#[derive(Debug, Clone)]
pub struct MsBasisSet<T> {
    pub variant: Variant,
    pub rows: Vec<BasisRow>,
    n_free: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> MsBasisSet<T> {
    /// One basis function per auxiliary function, blocks processed in parallel.
    pub fn build(builder: &BasisBuilder<'_, T>, layers: &LayerRule, variant: Variant) -> Result<Self> {
        let grid = builder.grid;
        if let LayerRule::PerBlock(v) = layers {
            if v.len() != grid.n_blocks() {
                return Err(Error::InvalidArgument(format!(
                    "{} per-block layer counts for {} blocks",
                    v.len(),
                    grid.n_blocks()
                )));
            }
        }
        let dof = builder.dof_map();
        let per_block: Vec<Vec<SparseRow<T>>> = grid
            .active_blocks()
            .par_iter()
            .map(|&i| {
                let m = layers.layers(i);
                let patch = PatchSystem::new(builder, i, m)?;
                let cols: Vec<usize> = patch
                    .region
                    .free_nodes
                    .iter()
                    .map(|&v| dof.free_index(v).expect("patch unknowns are free"))
                    .collect();
                (0..patch.n_own)
                    .map(|j| {
                        let psi = patch.solve(j, variant)?;
                        Ok((BasisRow { block: i, eig: j, layers: m }, cols.clone(), psi))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;

        let mut rows = Vec::new();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (row, c, v) in per_block.into_iter().flatten() {
            rows.push(row);
            cols.extend(c);
            vals.extend(v);
            row_ptr.push(cols.len());
        }
        Ok(MsBasisSet {
            variant,
            rows,
            n_free: dof.n_free(),
            row_ptr,
            cols,
            vals,
        })
    }

    /// `N_ms`.
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Row `r` of `R` as `(free indices, values)`, indices ascending.
    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[s..e], &self.vals[s..e])
    }

    /// `R·v` for `v` over free unknowns.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..self.n_rows())
            .map(|r| {
                let (c, x) = self.row(r);
                c.iter().zip(x).map(|(&k, &w)| w * v[k]).sum()
            })
            .collect()
    }

    /// `Rᵀ·u` over free unknowns.
    pub fn apply_transpose(&self, u: &[T]) -> Vec<T> {
        assert_eq!(u.len(), self.n_rows());
        let mut out = vec![T::zero(); self.n_free];
        for (r, &ur) in u.iter().enumerate() {
            let (c, x) = self.row(r);
            for (&k, &w) in c.iter().zip(x) {
                out[k] += w * ur;
            }
        }
        out
    }

    /// Basis function `r` on all mesh nodes.
    pub fn function(&self, r: usize, dof_map: &DofMap) -> ScalarField<T> {
        let mut free = vec![T::zero(); self.n_free];
        let (c, x) = self.row(r);
        for (&k, &w) in c.iter().zip(x) {
            free[k] = w;
        }
        dof_map.extend(&free)
    }

    /// `R·A·Rᵀ` for `A` over free unknowns; exactly symmetric.
    pub fn galerkin_matrix(&self, a: &SparseMatrix<T>) -> DenseMatrix<T> {
        let n = self.n_rows();
        // Column lists of R: for each free unknown the rows touching it.
        let mut col_ptr = vec![0usize; self.n_free + 1];
        for &k in &self.cols {
            col_ptr[k + 1] += 1;
        }
        for k in 0..self.n_free {
            col_ptr[k + 1] += col_ptr[k];
        }
        let mut fill = col_ptr.clone();
        let mut col_rows = vec![0usize; self.cols.len()];
        let mut col_vals = vec![T::zero(); self.cols.len()];
        for r in 0..n {
            let (c, x) = self.row(r);
            for (&k, &w) in c.iter().zip(x) {
                col_rows[fill[k]] = r;
                col_vals[fill[k]] = w;
                fill[k] += 1;
            }
        }

        let dense_rows: Vec<Vec<T>> = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![T::zero(); self.n_free], vec![false; self.n_free], Vec::new()),
                |(y, mark, touched), r| {
                    let (c, x) = self.row(r);
                    for (&k, &w) in c.iter().zip(x) {
                        let (ac, av) = a.row(k);
                        for (&q, &aq) in ac.iter().zip(av) {
                            if !mark[q] {
                                mark[q] = true;
                                touched.push(q);
                            }
                            y[q] += aq * w;
                        }
                    }
                    touched.sort_unstable();
                    let mut out = vec![T::zero(); n];
                    for &q in touched.iter() {
                        let yq = y[q];
                        for p in col_ptr[q]..col_ptr[q + 1] {
                            out[col_rows[p]] += col_vals[p] * yq;
                        }
                        y[q] = T::zero();
                        mark[q] = false;
                    }
                    touched.clear();
                    out
                },
            )
            .collect();
        let mut ac = DenseMatrix::from_row_major(n, n, dense_rows.into_iter().flatten().collect());
        ac.symmetrize();
        ac
    }
}
