//! Local spectral problems on coarse blocks and the auxiliary space they span.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::coarse::CoarseGrid;
use crate::error::Result;
use crate::fem::{element_mass, element_stiffness, ScalarField};
use crate::geometry::TriMesh;
use crate::linalg::{generalized_symmetric_eig, DenseMatrix, EigenPairs};
use crate::scalar::{dot, Scalar};

/// Default number of auxiliary functions per block.
pub const DEFAULT_EIGS: usize = 3;

/// Relative size below which the first eigenvalue is set to zero.
const ZERO_MODE_TOL: f64 = 1e-10;

/// Dense `(A_i, S_i)` on the nodes of block `i` (in `grid.block(i).nodes` order).
///
/// `A_i` is the Neumann stiffness of the block's triangles and `S_i` their
/// mass weighted by `kappa` (one value per mesh triangle).
pub fn local_matrices<T: Scalar>(
    grid: &CoarseGrid<T>,
    mesh: &TriMesh<T>,
    kappa: &[T],
    i: usize,
) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let blk = grid.block(i);
    let n = blk.nodes.len();
    let mut a = DenseMatrix::zeros(n, n);
    let mut s = DenseMatrix::zeros(n, n);
    for &t in &blk.triangles {
        let tri = mesh.triangles[t];
        let loc = tri.map(|v| blk.nodes.binary_search(&v).expect("triangle node in block"));
        let ke = element_stiffness(mesh.vertices(t));
        let me = element_mass(mesh.area(t) * kappa[t]);
        for p in 0..3 {
            for q in 0..3 {
                a[(loc[p], loc[q])] += ke[p][q];
                s[(loc[p], loc[q])] += me[p][q];
            }
        }
    }
    (a, s)
}

/// The `l` smallest pairs of `A·φ = λ·S·φ`, `S`-orthonormal, with the
/// Neumann zero mode's round-off removed from `λ_1`.
pub fn solve_local_spectral<T: Scalar>(a: &DenseMatrix<T>, s: &DenseMatrix<T>, l: usize) -> Result<EigenPairs<T>> {
    let mut pairs = generalized_symmetric_eig(a, s, l)?;
    let top = pairs.values[l - 1].max(T::one());
    if pairs.values[0].abs() <= T::of(ZERO_MODE_TOL) * top {
        pairs.values[0] = T::zero();
    }
    Ok(pairs)
}

/// Auxiliary functions of one non-empty block.
#[derive(Debug, Clone)]
pub struct AuxBlock<T> {
    pub block: usize,
    /// Global index of this block's first auxiliary function.
    pub offset: usize,
    /// Block nodes; vectors below are indexed like this list.
    pub nodes: Vec<usize>,
    pub values: Vec<T>,
    /// `φ^i_j` on the block nodes.
    pub vectors: Vec<Vec<T>>,
    /// `S_i·φ^i_j`, so that `s_i(v, φ^i_j) = weighted[j]·v|K_i`.
    pub weighted: Vec<Vec<T>>,
}

impl<T: Scalar> AuxBlock<T> {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    fn restrict(&self, v: &ScalarField<T>) -> Vec<T> {
        self.nodes.iter().map(|&n| v.0[n]).collect()
    }
}

/// Per-block fields; values on shared nodes may differ between blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockField<T> {
    pub values: Vec<Vec<T>>,
}

/// `V_aux`: the first `l_i` local eigenfunctions of every non-empty block.
#[derive(Debug, Clone)]
pub struct AuxSpace<T> {
    blocks: Vec<AuxBlock<T>>,
    position: Vec<Option<usize>>,
    n_aux: usize,
}

impl<T: Scalar> AuxSpace<T> {
    /// Solves the local problems of all non-empty blocks in parallel.
    ///
    /// A block with fewer than `l` nodes keeps all of its eigenpairs.
    pub fn build(grid: &CoarseGrid<T>, mesh: &TriMesh<T>, kappa: &[T], l: usize) -> Result<Self> {
        let solved: Vec<(usize, EigenPairs<T>, DenseMatrix<T>)> = grid
            .active_blocks()
            .par_iter()
            .map(|&i| {
                let (a, s) = local_matrices(grid, mesh, kappa, i);
                let li = l.min(a.rows());
                solve_local_spectral(&a, &s, li).map(|p| (i, p, s))
            })
            .collect::<Result<_>>()?;
        let mut position = vec![None; grid.n_blocks()];
        let mut blocks = Vec::with_capacity(solved.len());
        let mut offset = 0;
        for (i, pairs, s) in solved {
            let vectors: Vec<Vec<T>> = (0..pairs.len()).map(|j| pairs.vector(j)).collect();
            let weighted = vectors.iter().map(|v| s.matvec(v)).collect();
            position[i] = Some(blocks.len());
            let len = pairs.len();
            blocks.push(AuxBlock {
                block: i,
                offset,
                nodes: grid.block(i).nodes.clone(),
                values: pairs.values,
                vectors,
                weighted,
            });
            offset += len;
        }
        Ok(AuxSpace {
            blocks,
            position,
            n_aux: offset,
        })
    }

    /// Total number of auxiliary functions.
    pub fn n_aux(&self) -> usize {
        self.n_aux
    }

    pub fn blocks(&self) -> &[AuxBlock<T>] {
        &self.blocks
    }

    /// Auxiliary data of coarse block `i`, if it is non-empty.
    pub fn block(&self, i: usize) -> Option<&AuxBlock<T>> {
        self.position[i].map(|p| &self.blocks[p])
    }

    /// Global index of `φ^i_j`.
    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        self.block(i).filter(|b| j < b.len()).map(|b| b.offset + j)
    }

    /// `(block, j)` of a global auxiliary index.
    pub fn pair(&self, index: usize) -> (usize, usize) {
        let p = self.blocks.partition_point(|b| b.offset <= index) - 1;
        (self.blocks[p].block, index - self.blocks[p].offset)
    }

    /// `φ^i_j` extended by zero to all mesh nodes.
    pub fn extended(&self, i: usize, j: usize, n_nodes: usize) -> ScalarField<T> {
        let b = self.block(i).expect("non-empty block");
        let mut out = ScalarField::zeros(n_nodes);
        for (k, &v) in b.nodes.iter().enumerate() {
            out.0[v] = b.vectors[j][k];
        }
        out
    }

    /// Coefficients `s_i(v|K_i, φ^i_j)` of `π(v)`, in global auxiliary order.
    pub fn project(&self, v: &ScalarField<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_aux);
        for b in &self.blocks {
            let local = b.restrict(v);
            out.extend(b.weighted.iter().map(|w| dot(w, &local)));
        }
        out
    }

    /// [`AuxSpace::project`] of a per-block field.
    pub fn project_blocks(&self, f: &BlockField<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_aux);
        for (b, local) in self.blocks.iter().zip(&f.values) {
            out.extend(b.weighted.iter().map(|w| dot(w, local)));
        }
        out
    }

    /// Restriction of a global field to every block.
    pub fn to_blocks(&self, v: &ScalarField<T>) -> BlockField<T> {
        BlockField {
            values: self.blocks.iter().map(|b| b.restrict(v)).collect(),
        }
    }

    /// `Σ c^i_j φ^i_j`, block by block.
    pub fn reconstruct(&self, coeffs: &[T]) -> BlockField<T> {
        assert_eq!(coeffs.len(), self.n_aux);
        let values = self
            .blocks
            .iter()
            .map(|b| {
                let mut acc = vec![T::zero(); b.nodes.len()];
                for (j, phi) in b.vectors.iter().enumerate() {
                    let c = coeffs[b.offset + j];
                    for (a, p) in acc.iter_mut().zip(phi) {
                        *a += c * *p;
                    }
                }
                acc
            })
            .collect();
        BlockField { values }
    }

    /// ‖π(v)‖²_s, which equals the squared coefficient norm by orthonormality.
    pub fn pi_s_norm_sq(&self, v: &ScalarField<T>) -> T {
        self.project(v).iter().map(|c| *c * *c).sum()
    }

    /// One row per block: `block,lambda_1,...,lambda_l`.
    pub fn spectrum_csv(&self) -> String {
        let width = self.blocks.iter().map(|b| b.len()).max().unwrap_or(0);
        let mut out = String::from("block");
        for j in 1..=width {
            let _ = write!(out, ",lambda_{j}");
        }
        out.push('\n');
        for b in &self.blocks {
            let _ = write!(out, "{}", b.block);
            for j in 0..width {
                match b.values.get(j) {
                    Some(v) => {
                        let _ = write!(out, ",{:e}", v.as_f64());
                    }
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_stiffness;
    use crate::geometry::{generate_perforations, triangulate, NodeTag, PerforatedDomainSpec};
    use rand::{Rng, SeedableRng};

    fn setup(n: usize, nb: usize) -> (TriMesh<f64>, CoarseGrid<f64>, Vec<f64>) {
        let spec = generate_perforations(12, (0.03, 0.05), 0.03, 4).unwrap();
        let m = triangulate(&spec, n).unwrap();
        let g = CoarseGrid::build(&m, nb).unwrap();
        let k = g.kappa_tilde(&m);
        (m, g, k)
    }

    /// Generalized eigenvalues by cyclic Jacobi on `S^{-1/2} A S^{-1/2}`, with
    /// `S^{-1/2}` itself from a Jacobi diagonalization of `S`.
    fn jacobi_eigenvalues(a: &DenseMatrix<f64>) -> (Vec<f64>, DenseMatrix<f64>) {
        let n = a.rows();
        let mut m = a.clone();
        let mut v = DenseMatrix::identity(n);
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| m[(i, j)].powi(2)).sum();
            if off < 1e-26 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if m[(p, q)].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                        m.row_mut(k)[p] = c * mkp - s * mkq;
                        m.row_mut(k)[q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                        m.row_mut(p)[k] = c * mpk - s * mqk;
                        m.row_mut(q)[k] = s * mpk + c * mqk;
                    }
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v.row_mut(k)[p] = c * vkp - s * vkq;
                        v.row_mut(k)[q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        ((0..n).map(|i| m[(i, i)]).collect(), v)
    }

    fn brute_force_pencil(a: &DenseMatrix<f64>, s: &DenseMatrix<f64>) -> Vec<f64> {
        let n = a.rows();
        let (d, v) = jacobi_eigenvalues(s);
        let mut inv_sqrt = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv_sqrt.row_mut(i)[j] = (0..n).map(|k| v[(i, k)] * v[(j, k)] / d[k].sqrt()).sum();
            }
        }
        let c = inv_sqrt.matmul(a).matmul(&inv_sqrt);
        let mut vals = jacobi_eigenvalues(&c).0;
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        vals
    }

    #[test]
    fn single_triangle_block_matrices() {
        let m = TriMesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            tags: vec![NodeTag::OuterDirichlet; 3],
            grid_n: None,
        };
        let g = CoarseGrid::build(&m, 1).unwrap();
        let (a, s) = local_matrices(&g, &m, &[1.0], 0);
        let ka: [[f64; 3]; 3] = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[(i, j)] - ka[i][j]).abs() < 1e-15);
                let ks: f64 = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert!((s[(i, j)] - ks).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn local_stiffness_is_restricted_global_stiffness() {
        let (m, g, k) = setup(24, 4);
        for &i in g.active_blocks() {
            let (a, s) = local_matrices(&g, &m, &k, i);
            let blk = g.block(i);
            let ones = vec![1.0; blk.nodes.len()];
            assert!(a.matvec(&ones).iter().all(|v| v.abs() < 1e-12));
            assert!(a.is_symmetric(1e-14) && s.is_symmetric(1e-14));
            // Oracle: assemble a mesh made only of the block's triangles.
            let sub = TriMesh {
                nodes: m.nodes.clone(),
                triangles: blk.triangles.iter().map(|&t| m.triangles[t]).collect(),
                tags: m.tags.clone(),
                grid_n: None,
            };
            let full = assemble_stiffness(&sub).unwrap();
            for (p, &u) in blk.nodes.iter().enumerate() {
                for (q, &v) in blk.nodes.iter().enumerate() {
                    assert!((a[(p, q)] - full.get(u, v)).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn zero_mode_and_orthonormality() {
        let (m, g, k) = setup(24, 4);
        let aux = AuxSpace::build(&g, &m, &k, 3).unwrap();
        assert_eq!(aux.n_aux(), 3 * g.active_blocks().len());
        for b in aux.blocks() {
            let (a, s) = local_matrices(&g, &m, &k, b.block);
            assert_eq!(b.values[0], 0.0);
            assert!(b.values.windows(2).all(|w| w[0] <= w[1]));
            let c0 = b.vectors[0][0];
            assert!(b.vectors[0].iter().all(|v| (v - c0).abs() < 1e-8 * c0.abs()));
            for (j, phi) in b.vectors.iter().enumerate() {
                for (q, psi) in b.vectors.iter().enumerate() {
                    let sij = dot(phi, &s.matvec(psi));
                    assert!((sij - if j == q { 1.0 } else { 0.0 }).abs() < 1e-8);
                }
                let r: Vec<f64> = a.matvec(phi).iter().zip(s.matvec(phi)).map(|(x, y)| x - b.values[j] * y).collect();
                let scale = a.max_abs().max(1.0);
                assert!(r.iter().all(|v| v.abs() <= 1e-8 * scale));
            }
        }
    }

    #[test]
    fn full_spectrum_matches_jacobi_oracle() {
        let (m, g, k) = setup(16, 4);
        let i = g.active_blocks()[5];
        let (a, s) = local_matrices(&g, &m, &k, i);
        let n = a.rows();
        let got = solve_local_spectral(&a, &s, n).unwrap();
        let want = brute_force_pencil(&a, &s);
        for (x, y) in got.values.iter().zip(&want) {
            assert!((x - y).abs() <= 1e-8 * y.abs().max(1.0), "{x} vs {y}");
        }
        // Growing l keeps the leading part of the list.
        let fewer = solve_local_spectral(&a, &s, 4).unwrap();
        for (x, y) in fewer.values.iter().zip(&got.values) {
            assert!((x - y).abs() < 1e-10 * y.abs().max(1.0));
        }
    }

    #[test]
    fn identical_blocks_have_identical_spectra() {
        let m: TriMesh<f64> = triangulate(&PerforatedDomainSpec::unperforated(), 32).unwrap();
        let g = CoarseGrid::build(&m, 4).unwrap();
        let k = g.kappa_tilde(&m);
        let aux = AuxSpace::build(&g, &m, &k, 5).unwrap();
        let first = &aux.block(0).unwrap().values;
        for b in aux.blocks() {
            for (x, y) in b.values.iter().zip(first) {
                assert!((x - y).abs() <= 1e-10 * y.max(1.0));
            }
        }
    }

    #[test]
    fn projection_of_an_aux_function_is_a_unit_vector() {
        let (m, g, k) = setup(24, 4);
        let aux = AuxSpace::build(&g, &m, &k, 3).unwrap();
        let idx = aux.index(g.active_blocks()[6], 2).unwrap();
        let mut e = vec![0.0; aux.n_aux()];
        e[idx] = 1.0;
        let c = aux.project_blocks(&aux.reconstruct(&e));
        for (q, v) in c.iter().enumerate() {
            assert!((v - e[q]).abs() < 1e-10);
        }
        assert_eq!(aux.pair(idx), (g.active_blocks()[6], 2));
        // Extended by zero the function still projects to 1 on its own block.
        let (i, j) = aux.pair(idx);
        let ext = aux.extended(i, j, m.n_nodes());
        assert!((aux.project(&ext)[idx] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn projection_is_idempotent_and_local() {
        let (m, g, k) = setup(24, 4);
        let aux = AuxSpace::build(&g, &m, &k, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v = ScalarField((0..m.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let c = aux.project(&v);
        let cc = aux.project_blocks(&aux.reconstruct(&c));
        for (x, y) in c.iter().zip(&cc) {
            assert!((x - y).abs() < 1e-10);
        }
        // Zero the field on block i: its coefficients vanish.
        let i = g.active_blocks()[3];
        let mut w = v.clone();
        for &node in &g.block(i).nodes {
            w.0[node] = 0.0;
        }
        let b = aux.block(i).unwrap();
        let cw = aux.project(&w);
        assert!(cw[b.offset..b.offset + b.len()].iter().all(|c| *c == 0.0));
    }

    #[test]
    fn s_orthogonal_field_has_zero_projection() {
        let (m, g, k) = setup(24, 4);
        let aux = AuxSpace::build(&g, &m, &k, 3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut f = aux.to_blocks(&ScalarField((0..m.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect()));
        // Gram-Schmidt against each block's aux functions in the s_i product.
        for (p, b) in aux.blocks().iter().enumerate() {
            let (_, s) = local_matrices(&g, &m, &k, b.block);
            for phi in &b.vectors {
                let c = dot(&s.matvec(phi), &f.values[p]);
                for (x, y) in f.values[p].iter_mut().zip(phi) {
                    *x -= c * y;
                }
            }
        }
        assert!(aux.project_blocks(&f).iter().all(|c| c.abs() <= 1e-10));
    }

    #[test]
    fn small_blocks_keep_all_modes_and_csv_is_rectangular() {
        let (m, g, k) = setup(8, 4);
        let aux = AuxSpace::build(&g, &m, &k, 12).unwrap();
        assert!(aux.blocks().iter().all(|b| b.len() == b.nodes.len().min(12)));
        let csv = aux.spectrum_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), aux.blocks().len() + 1);
        let width = lines[0].split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == width));
    }
}
