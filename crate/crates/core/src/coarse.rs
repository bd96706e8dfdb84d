//! Square coarse partition of a fine mesh, bilinear partition of unity, the
//! weight κ̃ and oversampled patches.

use serde::Serialize;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{NodeTag, TriMesh};
use crate::scalar::Scalar;

/// One coarse square. Lattice index is `bx + N·by`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseBlock {
    pub bx: usize,
    pub by: usize,
    /// Fine triangles whose centroid lies in the square, ascending.
    pub triangles: Vec<usize>,
    /// Vertices of those triangles, ascending.
    pub nodes: Vec<usize>,
}

impl CoarseBlock {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }
}

/// Bilinear hat of one coarse vertex sampled at fine nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseVertex<T> {
    pub a: usize,
    pub b: usize,
    /// `(node, χ(node))` for nodes where χ is nonzero.
    pub hat: Vec<(usize, T)>,
}

#[derive(Debug, Clone)]
pub struct CoarseGrid<T> {
    blocks_per_side: usize,
    h: T,
    blocks: Vec<CoarseBlock>,
    active: Vec<usize>,
    vertices: Vec<CoarseVertex<T>>,
    element_to_block: Vec<usize>,
    node_blocks: Vec<SmallVec<[usize; 4]>>,
    dirichlet: Vec<bool>,
}

/// Diagnostic summary of a coarse grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub blocks_per_side: usize,
    #[serde(rename = "H")]
    pub h: f64,
    pub n_blocks: usize,
    pub n_empty: usize,
    pub n_coarse_vertices: usize,
}

/// `K_{i,m}` with its free fine unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct OversampleRegion {
    pub block: usize,
    pub layers: usize,
    /// Non-empty blocks of the patch, ascending.
    pub blocks: Vec<usize>,
    /// Fine triangles of the patch, ascending.
    pub triangles: Vec<usize>,
    /// Non-Dirichlet nodes all of whose triangles lie in the patch, ascending.
    pub free_nodes: Vec<usize>,
}

impl OversampleRegion {
    pub fn contains_block(&self, b: usize) -> bool {
        self.blocks.binary_search(&b).is_ok()
    }
}

#[inline]
fn tent<T: Scalar>(t: T) -> T {
    (T::one() - t.abs()).max(T::zero())
}

impl<T: Scalar> CoarseGrid<T> {
    /// Partitions `mesh` into `blocks_per_side²` squares of side `H = 1/blocks_per_side`.
    ///
    /// Meshes from the structured generator must nest; imported meshes
    /// (without a grid size) are accepted as they are.
    pub fn build(mesh: &TriMesh<T>, blocks_per_side: usize) -> Result<Self> {
        let nb = blocks_per_side;
        if nb == 0 {
            return Err(Error::InvalidArgument("blocks_per_side must be positive".into()));
        }
        if let Some(n) = mesh.grid_n {
            if n % nb != 0 {
                return Err(Error::NonNested {
                    blocks_per_side: nb,
                    fine_n: n,
                });
            }
        }
        let h = T::one() / T::of_usize(nb);
        let cell = |x: T| -> usize {
            let k = (x / h).floor().to_isize().unwrap_or(0);
            k.clamp(0, nb as isize - 1) as usize
        };

        let mut blocks: Vec<CoarseBlock> = (0..nb * nb)
            .map(|k| CoarseBlock {
                bx: k % nb,
                by: k / nb,
                triangles: Vec::new(),
                nodes: Vec::new(),
            })
            .collect();
        let mut element_to_block = Vec::with_capacity(mesh.n_triangles());
        let mut node_blocks: Vec<SmallVec<[usize; 4]>> = vec![SmallVec::new(); mesh.n_nodes()];
        for t in 0..mesh.n_triangles() {
            let c = mesh.centroid(t);
            let b = cell(c[0]) + nb * cell(c[1]);
            element_to_block.push(b);
            blocks[b].triangles.push(t);
            for &v in &mesh.triangles[t] {
                blocks[b].nodes.push(v);
                if !node_blocks[v].contains(&b) {
                    node_blocks[v].push(b);
                }
            }
        }
        for b in &mut blocks {
            b.nodes.sort_unstable();
            b.nodes.dedup();
        }
        for nbk in &mut node_blocks {
            nbk.sort_unstable();
        }
        let active = (0..nb * nb).filter(|&b| !blocks[b].is_empty()).collect();

        let mut vertices = Vec::with_capacity((nb + 1) * (nb + 1));
        for b in 0..=nb {
            for a in 0..=nb {
                vertices.push(CoarseVertex { a, b, hat: Vec::new() });
            }
        }
        for (v, p) in mesh.nodes.iter().enumerate() {
            // Only the four corners of the containing cell can be nonzero.
            let (ca, cb) = (cell(p[0]), cell(p[1]));
            for b in cb..=cb + 1 {
                for a in ca..=ca + 1 {
                    let val = Self::hat_at(h, a, b, p[0], p[1]);
                    if val > T::zero() {
                        vertices[a + (nb + 1) * b].hat.push((v, val));
                    }
                }
            }
        }

        let dirichlet = mesh.tags.iter().map(|t| *t == NodeTag::OuterDirichlet).collect();
        Ok(CoarseGrid {
            blocks_per_side: nb,
            h,
            blocks,
            active,
            vertices,
            element_to_block,
            node_blocks,
            dirichlet,
        })
    }

    /// Closed-form value of the hat at coarse vertex `(a, b)`.
    pub fn hat_at(h: T, a: usize, b: usize, x: T, y: T) -> T {
        tent(x / h - T::of_usize(a)) * tent(y / h - T::of_usize(b))
    }

    pub fn blocks_per_side(&self) -> usize {
        self.blocks_per_side
    }

    /// Coarse size `H`.
    pub fn h(&self) -> T {
        self.h
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, i: usize) -> &CoarseBlock {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[CoarseBlock] {
        &self.blocks
    }

    /// Non-empty block indices, ascending; their count is `N_c`.
    pub fn active_blocks(&self) -> &[usize] {
        &self.active
    }

    pub fn is_empty_block(&self, i: usize) -> bool {
        self.blocks[i].is_empty()
    }

    pub fn n_empty(&self) -> usize {
        self.blocks.len() - self.active.len()
    }

    pub fn vertices(&self) -> &[CoarseVertex<T>] {
        &self.vertices
    }

    pub fn element_to_block(&self) -> &[usize] {
        &self.element_to_block
    }

    /// Blocks owning triangles incident to `node`.
    pub fn node_blocks(&self, node: usize) -> &[usize] {
        &self.node_blocks[node]
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            blocks_per_side: self.blocks_per_side,
            h: self.h.as_f64(),
            n_blocks: self.blocks.len(),
            n_empty: self.n_empty(),
            n_coarse_vertices: self.vertices.len(),
        }
    }

    /// κ̃ = Σ_j |∇χ_j|² at each triangle centroid, using the hats of the
    /// triangle's block.
    pub fn kappa_tilde(&self, mesh: &TriMesh<T>) -> Vec<T> {
        let two = T::of(2.0);
        (0..mesh.n_triangles())
            .map(|t| {
                let blk = &self.blocks[self.element_to_block[t]];
                let c = mesh.centroid(t);
                let s = c[0] / self.h - T::of_usize(blk.bx);
                let r = c[1] / self.h - T::of_usize(blk.by);
                let one = T::one();
                // The four local hats (1−s)(1−r), s(1−r), (1−s)r, sr.
                let sum = (one - r) * (one - r) + r * r + (one - s) * (one - s) + s * s;
                two * sum / (self.h * self.h)
            })
            .collect()
    }

    /// Non-empty blocks within Chebyshev distance `m` of block `i`.
    pub fn patch_blocks(&self, i: usize, m: usize) -> Vec<usize> {
        let nb = self.blocks_per_side;
        let (bx, by) = (i % nb, i / nb);
        let mut out = Vec::new();
        for y in by.saturating_sub(m)..=(by + m).min(nb - 1) {
            for x in bx.saturating_sub(m)..=(bx + m).min(nb - 1) {
                let b = x + nb * y;
                if !self.blocks[b].is_empty() {
                    out.push(b);
                }
            }
        }
        out
    }

    /// `K_{i,m}`: block `i` enlarged by `m` layers of blocks.
    pub fn oversample(&self, i: usize, m: usize) -> Result<OversampleRegion> {
        if i >= self.blocks.len() || self.blocks[i].is_empty() {
            return Err(Error::InvalidArgument(format!("block {i} is empty or out of range")));
        }
        let blocks = self.patch_blocks(i, m);
        let mut triangles: Vec<usize> = blocks.iter().flat_map(|&b| self.blocks[b].triangles.iter().copied()).collect();
        triangles.sort_unstable();
        let mut free_nodes: Vec<usize> = blocks
            .iter()
            .flat_map(|&b| self.blocks[b].nodes.iter().copied())
            .filter(|&v| !self.dirichlet[v] && self.node_blocks[v].iter().all(|nb| blocks.binary_search(nb).is_ok()))
            .collect();
        free_nodes.sort_unstable();
        free_nodes.dedup();
        Ok(OversampleRegion {
            block: i,
            layers: m,
            blocks,
            triangles,
            free_nodes,
        })
    }
}
