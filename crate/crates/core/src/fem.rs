//! P1 finite elements on a [`TriMesh`]: assembly, Dirichlet elimination,
//! the fine reference solve, and the L², energy and weighted norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NodeTag, TriMesh};
use crate::linalg::{conjugate_gradient, SparseMatrix};
use crate::scalar::{dot, Scalar};

/// Areas below this are treated as degenerate.
const MIN_AREA: f64 = 1e-14;

/// Nodal coefficients of a P1 function over all mesh nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T>(pub Vec<T>);

impl<T: Scalar> ScalarField<T> {
    pub fn zeros(n: usize) -> Self {
        ScalarField(vec![T::zero(); n])
    }

    pub fn constant(n: usize, c: T) -> Self {
        ScalarField(vec![c; n])
    }

    /// Samples `f(x, y)` at every node.
    pub fn interpolate(mesh: &TriMesh<T>, f: impl Fn(T, T) -> T) -> Self {
        ScalarField(mesh.nodes.iter().map(|p| f(p[0], p[1])).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        ScalarField(self.0.iter().zip(&other.0).map(|(a, b)| *a - *b).collect())
    }

    pub fn scaled(&self, alpha: T) -> Self {
        ScalarField(self.0.iter().map(|a| *a * alpha).collect())
    }
}

/// Maps mesh nodes to free unknowns; exactly the outer Dirichlet nodes are fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    free_index: Vec<Option<usize>>,
    free_nodes: Vec<usize>,
}

impl DofMap {
    pub fn new<T: Scalar>(mesh: &TriMesh<T>) -> Self {
        let mut free_index = vec![None; mesh.n_nodes()];
        let mut free_nodes = Vec::new();
        for (v, tag) in mesh.tags.iter().enumerate() {
            if *tag != NodeTag::OuterDirichlet {
                free_index[v] = Some(free_nodes.len());
                free_nodes.push(v);
            }
        }
        DofMap {
            free_index,
            free_nodes,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.free_index.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn n_fixed(&self) -> usize {
        self.n_nodes() - self.n_free()
    }

    #[inline]
    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.free_index[node]
    }

    /// Node of each free unknown, ascending.
    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    /// Free-unknown values of a full field.
    pub fn restrict<T: Scalar>(&self, field: &ScalarField<T>) -> Vec<T> {
        self.free_nodes.iter().map(|&v| field.0[v]).collect()
    }

    /// Full field from free-unknown values; fixed nodes carry zero.
    pub fn extend<T: Scalar>(&self, free: &[T]) -> ScalarField<T> {
        assert_eq!(free.len(), self.n_free());
        let mut out = vec![T::zero(); self.n_nodes()];
        for (k, &v) in self.free_nodes.iter().enumerate() {
            out[v] = free[k];
        }
        ScalarField(out)
    }
}

/// Right-hand side `f` of the Poisson problem.
#[derive(Debug, Clone, PartialEq)]
pub enum Source<T> {
    Zero,
    /// One constant per triangle.
    PerTriangle(Vec<T>),
    /// Nodal values of a P1 interpolant.
    PerNode(Vec<T>),
}

/// Axis-aligned rectangle carrying a constant source value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceRectangle {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub value: f64,
}

impl SourceRectangle {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64, value: f64) -> Self {
        SourceRectangle { x0, y0, x1, y1, value }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Piecewise-constant source described by rectangles; later rectangles win on overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleSource {
    #[serde(default)]
    pub rectangles: Vec<SourceRectangle>,
    #[serde(default)]
    pub default: f64,
}

impl RectangleSource {
    pub fn zero() -> Self {
        RectangleSource {
            rectangles: Vec::new(),
            default: 0.0,
        }
    }

    /// Four unit-valued squares, zero elsewhere.
    pub fn four_squares() -> Self {
        let sq = |x: f64, y: f64| SourceRectangle::new(x, y, x + 0.2, y + 0.2, 1.0);
        RectangleSource {
            rectangles: vec![sq(0.15, 0.15), sq(0.65, 0.15), sq(0.15, 0.65), sq(0.65, 0.65)],
            default: 0.0,
        }
    }

    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        self.rectangles
            .iter()
            .rev()
            .find(|r| r.contains(x, y))
            .map_or(self.default, |r| r.value)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.default.is_finite()
            && self
                .rectangles
                .iter()
                .all(|r| [r.x0, r.y0, r.x1, r.y1, r.value].iter().all(|v| v.is_finite()));
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidArgument("source values must be finite".into()))
        }
    }

    /// Evaluates the source at triangle centroids.
    pub fn to_source<T: Scalar>(&self, mesh: &TriMesh<T>) -> Source<T> {
        if self.rectangles.is_empty() && self.default == 0.0 {
            return Source::Zero;
        }
        Source::PerTriangle(
            (0..mesh.n_triangles())
                .map(|t| {
                    let c = mesh.centroid(t);
                    T::of(self.value_at(c[0].as_f64(), c[1].as_f64()))
                })
                .collect(),
        )
    }
}

/// Exact P1 stiffness of one triangle.
pub fn element_stiffness<T: Scalar>(p: [[T; 2]; 3]) -> [[T; 3]; 3] {
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    // ∇λ_i = (b_i, c_i) / (2·area)
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let scale = T::one() / (T::of(2.0) * area2.abs());
    let mut k = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) * scale;
        }
    }
    k
}

/// Exact P1 mass of one triangle: (area/12)·[[2,1,1],[1,2,1],[1,1,2]].
pub fn element_mass<T: Scalar>(area: T) -> [[T; 3]; 3] {
    let off = area / T::of(12.0);
    let diag = off + off;
    [[diag, off, off], [off, diag, off], [off, off, diag]]
}

fn check_areas<T: Scalar>(mesh: &TriMesh<T>) -> Result<()> {
    for t in 0..mesh.n_triangles() {
        let a = mesh.area(t);
        if a < T::of(MIN_AREA) {
            return Err(Error::DegenerateTriangle {
                triangle: t,
                area: a.as_f64(),
            });
        }
    }
    Ok(())
}

/// Stiffness `A_ij = ∫ ∇φ_j·∇φ_i` over all nodes (no boundary conditions).
pub fn assemble_stiffness<T: Scalar>(mesh: &TriMesh<T>) -> Result<SparseMatrix<T>> {
    check_areas(mesh)?;
    assemble_stiffness_on(mesh, 0..mesh.n_triangles())
}

pub(crate) fn assemble_stiffness_on<T: Scalar>(
    mesh: &TriMesh<T>,
    triangles: impl IntoIterator<Item = usize>,
) -> Result<SparseMatrix<T>> {
    let mut trip = Vec::new();
    for t in triangles {
        let k = element_stiffness(mesh.vertices(t));
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], k[i][j]));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &trip))
}

/// Mass matrix `∫ w·φ_i·φ_j` with a per-triangle weight.
pub fn assemble_weighted_mass<T: Scalar>(mesh: &TriMesh<T>, weight: &[T]) -> SparseMatrix<T> {
    assert_eq!(weight.len(), mesh.n_triangles());
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let m = element_mass(mesh.area(t) * weight[t]);
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], m[i][j]));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_nodes(), mesh.n_nodes(), &trip)
}

pub fn assemble_mass<T: Scalar>(mesh: &TriMesh<T>) -> SparseMatrix<T> {
    assemble_weighted_mass(mesh, &vec![T::one(); mesh.n_triangles()])
}

/// Load vector `(f, φ_i)` over all nodes.
///
/// Piecewise-constant sources use the one-point centroid rule
/// (`f_T·area_T/3` per vertex, exact for constants); nodal sources are
/// integrated exactly as P1 interpolants through the mass matrix.
pub fn assemble_load<T: Scalar>(mesh: &TriMesh<T>, source: &Source<T>) -> Vec<T> {
    let mut load = vec![T::zero(); mesh.n_nodes()];
    match source {
        Source::Zero => {}
        Source::PerTriangle(values) => {
            assert_eq!(values.len(), mesh.n_triangles(), "one source value per triangle");
            let third = T::one() / T::of(3.0);
            for (t, tri) in mesh.triangles.iter().enumerate() {
                let share = values[t] * mesh.area(t) * third;
                for &v in tri {
                    load[v] += share;
                }
            }
        }
        Source::PerNode(values) => {
            assert_eq!(values.len(), mesh.n_nodes(), "one source value per node");
            load = assemble_mass(mesh).matvec(values);
        }
    }
    load
}

/// The Dirichlet-reduced linear system `A·u = F` on free unknowns.
#[derive(Debug, Clone)]
pub struct FemSystem<T> {
    pub stiffness: SparseMatrix<T>,
    pub load: Vec<T>,
    pub dof_map: DofMap,
}

impl<T: Scalar> FemSystem<T> {
    pub fn assemble(mesh: &TriMesh<T>, source: &Source<T>) -> Result<Self> {
        let dof_map = DofMap::new(mesh);
        let full = assemble_stiffness(mesh)?;
        let stiffness = full.principal_submatrix(dof_map.free_nodes());
        let load_full = assemble_load(mesh, source);
        let load = dof_map.free_nodes().iter().map(|&v| load_full[v]).collect();
        Ok(FemSystem {
            stiffness,
            load,
            dof_map,
        })
    }

    pub fn n_free(&self) -> usize {
        self.dof_map.n_free()
    }

    /// Jacobi-CG solve to relative residual `tol`.
    pub fn solve(&self, tol: T) -> Result<ScalarField<T>> {
        if self.dof_map.n_fixed() == 0 {
            return Err(Error::NoDirichlet);
        }
        let max_iter = 10 * self.n_free() + 100;
        let u = conjugate_gradient(&self.stiffness, &self.load, tol, max_iter)?;
        Ok(self.dof_map.extend(&u))
    }
}

/// Fine-scale Galerkin solution with homogeneous Dirichlet data on the outer square.
pub fn solve_fine<T: Scalar>(mesh: &TriMesh<T>, source: &Source<T>, tol: T) -> Result<ScalarField<T>> {
    if mesh.count_tag(NodeTag::OuterDirichlet) == 0 {
        return Err(Error::NoDirichlet);
    }
    FemSystem::assemble(mesh, source)?.solve(tol)
}

/// Energy, L² and weighted L² norms of fields on one mesh.
#[derive(Debug, Clone)]
pub struct Norms<T> {
    stiffness: SparseMatrix<T>,
    mass: SparseMatrix<T>,
    weighted_mass: Option<SparseMatrix<T>>,
}

/// Relative errors of an approximation against a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeErrors {
    pub l2: f64,
    pub energy: f64,
}

impl<T: Scalar> Norms<T> {
    pub fn new(mesh: &TriMesh<T>) -> Result<Self> {
        Ok(Norms {
            stiffness: assemble_stiffness(mesh)?,
            mass: assemble_mass(mesh),
            weighted_mass: None,
        })
    }

    /// Adds the weighted mass for [`Norms::s_norm`].
    pub fn with_weight(mut self, mesh: &TriMesh<T>, weight: &[T]) -> Self {
        self.weighted_mass = Some(assemble_weighted_mass(mesh, weight));
        self
    }

    fn form(m: &SparseMatrix<T>, u: &ScalarField<T>) -> T {
        m.quadratic_form(u.values()).max(T::zero()).sqrt()
    }

    /// ‖u‖_a = (∫ |∇u|²)^½.
    pub fn energy(&self, u: &ScalarField<T>) -> T {
        Self::form(&self.stiffness, u)
    }

    pub fn l2(&self, u: &ScalarField<T>) -> T {
        Self::form(&self.mass, u)
    }

    /// ‖u‖_s = (∫ κ̃ u²)^½; panics if no weight was attached.
    pub fn s_norm(&self, u: &ScalarField<T>) -> T {
        Self::form(self.weighted_mass.as_ref().expect("weight attached with with_weight"), u)
    }

    /// `(‖u_h − u‖/‖u_h‖, ‖u_h − u‖_a/‖u_h‖_a)`.
    pub fn relative_errors(&self, reference: &ScalarField<T>, approx: &ScalarField<T>) -> Result<RelativeErrors> {
        let r_l2 = self.l2(reference);
        let r_a = self.energy(reference);
        if r_l2 == T::zero() || r_a == T::zero() {
            return Err(Error::ZeroReference);
        }
        let diff = reference.sub(approx);
        Ok(RelativeErrors {
            l2: (self.l2(&diff) / r_l2).as_f64(),
            energy: (self.energy(&diff) / r_a).as_f64(),
        })
    }

    pub fn stiffness(&self) -> &SparseMatrix<T> {
        &self.stiffness
    }
}

/// `xᵀ·A·y` for a sparse symmetric `A`.
pub fn bilinear<T: Scalar>(a: &SparseMatrix<T>, x: &[T], y: &[T]) -> T {
    dot(x, &a.matvec(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, DiskPerforation, PerforatedDomainSpec};

    fn unit_triangle() -> TriMesh<f64> {
        TriMesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            tags: vec![NodeTag::OuterDirichlet; 3],
            grid_n: None,
        }
    }

    fn square(n: usize) -> TriMesh<f64> {
        triangulate(&PerforatedDomainSpec::unperforated(), n).unwrap()
    }

    #[test]
    fn unit_triangle_stiffness() {
        let a = assemble_stiffness(&unit_triangle()).unwrap().to_dense();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[(i, j)] - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_triangle_square_is_sum_of_elements() {
        let m = TriMesh {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            tags: vec![NodeTag::OuterDirichlet; 4],
            grid_n: None,
        };
        let a = assemble_stiffness(&m).unwrap().to_dense();
        // Hand assembly: both elements are right triangles with the right angle at
        // node 1 resp. 3, so the diagonal 0–2 has zero coupling.
        let want: [[f64; 4]; 4] = [
            [1.0, -0.5, 0.0, -0.5],
            [-0.5, 1.0, -0.5, 0.0],
            [0.0, -0.5, 1.0, -0.5],
            [-0.5, 0.0, -0.5, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((a[(i, j)] - want[i][j]).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn stiffness_kernel_and_symmetry() {
        let spec = PerforatedDomainSpec::with_disks(vec![DiskPerforation::new(0.4, 0.6, 0.17)]);
        let m: TriMesh<f64> = triangulate(&spec, 20).unwrap();
        let a = assemble_stiffness(&m).unwrap();
        assert!(a.max_row_sum() <= 1e-12);
        assert!(a.asymmetry() <= 1e-15);
        let ones = vec![1.0; m.n_nodes()];
        assert!(a.matvec(&ones).iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let mut m = unit_triangle();
        m.nodes[2] = [2.0, 0.0];
        assert!(matches!(assemble_stiffness(&m), Err(Error::DegenerateTriangle { .. })));
    }

    #[test]
    fn unit_triangle_mass() {
        let m = assemble_weighted_mass(&unit_triangle(), &[1.0]).to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 / 24.0 } else { 1.0 / 24.0 };
                assert!((m[(i, j)] - want).abs() < 1e-16);
            }
        }
        let z = assemble_weighted_mass(&unit_triangle(), &[0.0]);
        assert!(z.to_dense().max_abs() == 0.0);
    }

    #[test]
    fn weighted_mass_is_psd() {
        let m = square(8);
        let w: Vec<f64> = (0..m.n_triangles()).map(|t| 0.1 + (t % 7) as f64).collect();
        let mass = assemble_weighted_mass(&m, &w);
        let mut seed = 12345u64;
        for _ in 0..100 {
            let x: Vec<f64> = (0..m.n_nodes())
                .map(|_| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect();
            assert!(mass.quadratic_form(&x) >= 0.0);
        }
    }

    #[test]
    fn load_vectors() {
        let m = square(2);
        assert!(assemble_load(&m, &Source::Zero).iter().all(|v| *v == 0.0));
        let ones = assemble_load(&m, &Source::PerTriangle(vec![1.0; 8]));
        assert!((ones.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut ind = vec![0.0; 8];
        ind[3] = 1.0;
        let one = assemble_load(&m, &Source::PerTriangle(ind));
        let nz: Vec<f64> = one.iter().copied().filter(|v| *v != 0.0).collect();
        assert_eq!(nz.len(), 3);
        assert!(nz.iter().all(|v| (v - 1.0 / 24.0).abs() < 1e-16));
        let nodal = assemble_load(&m, &Source::PerNode(vec![1.0; 9]));
        assert!((nodal.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_source_zero_solution() {
        let u = solve_fine(&square(8), &Source::Zero, 1e-10).unwrap();
        assert!(u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn pure_neumann_is_rejected() {
        let mut m = square(4);
        m.tags.iter_mut().for_each(|t| *t = NodeTag::PerforationNeumann);
        assert!(matches!(
            solve_fine(&m, &Source::PerTriangle(vec![1.0; 32]), 1e-10),
            Err(Error::NoDirichlet)
        ));
    }

    fn manufactured_l2_error(n: usize) -> f64 {
        use std::f64::consts::PI;
        let m = square(n);
        let f = ScalarField::interpolate(&m, |x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
        let u = solve_fine(&m, &Source::PerNode(f.0), 1e-12).unwrap();
        let exact = ScalarField::interpolate(&m, |x, y| (PI * x).sin() * (PI * y).sin());
        Norms::new(&m).unwrap().l2(&u.sub(&exact))
    }

    #[test]
    fn manufactured_solution_converges_at_second_order() {
        let ratio = manufactured_l2_error(32) / manufactured_l2_error(64);
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn mirror_symmetric_problem_has_symmetric_solution() {
        let spec = PerforatedDomainSpec::with_disks(vec![
            DiskPerforation::new(0.3, 0.4, 0.1),
            DiskPerforation::new(0.7, 0.4, 0.1),
            DiskPerforation::new(0.5, 0.75, 0.12),
        ]);
        let m: TriMesh<f64> = triangulate(&spec, 32).unwrap();
        let src = RectangleSource {
            rectangles: vec![SourceRectangle::new(0.2, 0.1, 0.8, 0.3, 1.0)],
            default: 0.25,
        };
        let u = solve_fine(&m, &src.to_source(&m), 1e-13).unwrap();
        let mut index = std::collections::HashMap::new();
        for (v, p) in m.nodes.iter().enumerate() {
            index.insert(((p[0] * 32.0).round() as i64, (p[1] * 32.0).round() as i64), v);
        }
        for (v, p) in m.nodes.iter().enumerate() {
            let mirror = index[&(32 - (p[0] * 32.0).round() as i64, (p[1] * 32.0).round() as i64)];
            assert!((u.0[v] - u.0[mirror]).abs() < 1e-9);
        }
    }

    #[test]
    fn norms_of_simple_fields() {
        let m = square(8);
        let norms = Norms::new(&m).unwrap();
        let c = ScalarField::constant(m.n_nodes(), -2.5);
        assert!(norms.energy(&c) < 1e-12);
        assert!((norms.l2(&c) - 2.5).abs() < 1e-12);
        // u = x: |∇u|² = 1 integrates to the domain area.
        let x = ScalarField::interpolate(&m, |x, _| x);
        assert!((norms.energy(&x).powi(2) - 1.0).abs() < 1e-12);
        let u = ScalarField::interpolate(&m, |x, y| x * (1.0 - x) * y);
        let e = norms.relative_errors(&u, &u).unwrap();
        assert_eq!((e.l2, e.energy), (0.0, 0.0));
        assert!(matches!(
            norms.relative_errors(&ScalarField::zeros(m.n_nodes()), &u),
            Err(Error::ZeroReference)
        ));
        for alpha in [-3.0, 0.5, 7.0] {
            let s = u.scaled(alpha);
            assert!((norms.energy(&s) - alpha.abs() * norms.energy(&u)).abs() < 1e-12);
            assert!((norms.l2(&s) - alpha.abs() * norms.l2(&u)).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_field_energy_on_perforated_domain() {
        let spec = PerforatedDomainSpec::with_disks(vec![DiskPerforation::new(0.5, 0.5, 0.2)]);
        let m: TriMesh<f64> = triangulate(&spec, 16).unwrap();
        let x = ScalarField::interpolate(&m, |x, _| x);
        let e = Norms::new(&m).unwrap().energy(&x);
        assert!((e * e - m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn dof_map_fixes_exactly_dirichlet_nodes() {
        let m = square(4);
        let d = DofMap::new(&m);
        assert_eq!(d.n_fixed(), 16);
        assert_eq!(d.n_free(), 9);
        let field = d.extend(&[1.0; 9]);
        for (v, tag) in m.tags.iter().enumerate() {
            assert_eq!(field.0[v] == 0.0, *tag == NodeTag::OuterDirichlet);
        }
        assert_eq!(d.restrict(&field), vec![1.0; 9]);
    }

    #[test]
    fn single_precision_solve() {
        let m: TriMesh<f32> = triangulate(&PerforatedDomainSpec::unperforated(), 16).unwrap();
        let u = solve_fine(&m, &Source::PerTriangle(vec![1.0f32; m.n_triangles()]), 1e-5).unwrap();
        let mid = m.nodes.iter().position(|p| p[0] == 0.5 && p[1] == 0.5).unwrap();
        // Torsion function of the unit square at its center ≈ 0.0737.
        assert!((u.0[mid] - 0.0737).abs() < 2e-3, "{}", u.0[mid]);
    }
}
