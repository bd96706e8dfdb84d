use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::PerforatedDomainSpec;
use crate::scalar::Scalar;

/// Coordinate tolerance for on-outer-boundary tests.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Boundary role of a mesh node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeTag {
    Interior,
    /// Homogeneous Dirichlet node on the outer square.
    OuterDirichlet,
    /// Natural (zero-flux) node on a perforation boundary.
    PerforationNeumann,
}

/// Triangulation of a perforated domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh<T> {
    pub nodes: Vec<[T; 2]>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<NodeTag>,
    /// Cells per side when the mesh comes from the structured generator.
    pub grid_n: Option<usize>,
}

impl<T: Scalar> TriMesh<T> {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [[T; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    /// Signed area, positive for counter-clockwise triangles.
    pub fn signed_area(&self, t: usize) -> T {
        let [p, q, r] = self.vertices(t);
        T::of(0.5) * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn area(&self, t: usize) -> T {
        self.signed_area(t).abs()
    }

    pub fn total_area(&self) -> T {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> [T; 2] {
        let [p, q, r] = self.vertices(t);
        let third = T::one() / T::of(3.0);
        [(p[0] + q[0] + r[0]) * third, (p[1] + q[1] + r[1]) * third]
    }

    pub fn count_tag(&self, tag: NodeTag) -> usize {
        self.tags.iter().filter(|t| **t == tag).count()
    }

    /// Longest edge length.
    pub fn max_edge_length(&self) -> T {
        let mut h = T::zero();
        for tri in &self.triangles {
            for k in 0..3 {
                let p = self.nodes[tri[k]];
                let q = self.nodes[tri[(k + 1) % 3]];
                h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        h
    }

    /// Edges used by exactly one triangle, as sorted node pairs in ascending order.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut edges: Vec<[usize; 2]> = edge_use(&self.triangles)
            .into_iter()
            .filter_map(|(e, uses)| (uses.len() == 1).then_some(e))
            .collect();
        edges.sort_unstable();
        edges
    }

    /// Per node: lies on some boundary edge.
    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut on = vec![false; self.n_nodes()];
        for [a, b] in self.boundary_edges() {
            on[a] = true;
            on[b] = true;
        }
        on
    }

    /// Number of connected components of the edge-adjacency graph of triangles.
    pub fn triangle_components(&self) -> usize {
        let mut uf = UnionFind::new(self.n_triangles());
        for (_, uses) in edge_use(&self.triangles) {
            for w in uses.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        uf.count_roots()
    }

    /// Checks orientation, index range, orphan nodes and tag length.
    pub fn validate(&self) -> Result<()> {
        if self.tags.len() != self.n_nodes() {
            return Err(Error::InvalidArgument("tag count differs from node count".into()));
        }
        let mut used = vec![false; self.n_nodes()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= self.n_nodes() {
                    return Err(Error::InvalidArgument(format!("triangle {t} references node {v}")));
                }
                used[v] = true;
            }
            let a = self.signed_area(t);
            if !(a > T::zero()) {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    area: a.as_f64(),
                });
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidArgument(format!("node {v} is not used by any triangle")));
        }
        Ok(())
    }

    /// Rewrites node tags from the boundary edges and the perforation geometry.
    ///
    /// Boundary nodes on the outer square become `OuterDirichlet` (taking
    /// precedence at corners of clipped disks), other boundary nodes
    /// `PerforationNeumann`, everything else `Interior`.
    pub fn classify_boundary(mut self, spec: &PerforatedDomainSpec) -> Result<Self> {
        let on_boundary = self.boundary_nodes();
        let reach = self.max_edge_length().as_f64();
        for (v, &b) in on_boundary.iter().enumerate() {
            if !b {
                self.tags[v] = NodeTag::Interior;
                continue;
            }
            let [x, y] = self.nodes[v];
            let (x, y) = (x.as_f64(), y.as_f64());
            if on_outer_square(x, y) {
                self.tags[v] = NodeTag::OuterDirichlet;
            } else if spec
                .disks
                .iter()
                .any(|d| d.distance_to_center(x, y) <= d.radius + reach)
            {
                self.tags[v] = NodeTag::PerforationNeumann;
            } else {
                return Err(Error::InconsistentGeometry { node: v, x, y });
            }
        }
        Ok(self)
    }
}

pub(crate) fn on_outer_square(x: f64, y: f64) -> bool {
    x.abs() <= BOUNDARY_TOL
        || (1.0 - x).abs() <= BOUNDARY_TOL
        || y.abs() <= BOUNDARY_TOL
        || (1.0 - y).abs() <= BOUNDARY_TOL
}

/// Structured `n × n` triangulation of the unit square with perforated triangles removed.
///
/// Cell `(i, j)` is split along the diagonal through its lower-left corner when
/// `i + j` is even and through its lower-right corner otherwise, which makes
/// the triangulation symmetric under both axis reflections for even `n`.
/// Triangles whose centroid lies inside a disk are dropped, unused nodes are
/// removed and indices compacted (original row-major order preserved).
pub fn triangulate<T: Scalar>(spec: &PerforatedDomainSpec, n: usize) -> Result<TriMesh<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("fine grid needs n >= 2, got {n}")));
    }
    spec.validate()?;
    let stride = n + 1;
    let id = |i: usize, j: usize| j * stride + i;
    let inv_n = 1.0 / n as f64;
    let mut kept: Vec<[usize; 3]> = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let pair = if (i + j) % 2 == 0 {
                [[a, b, c], [a, c, d]]
            } else {
                [[a, b, d], [b, c, d]]
            };
            for tri in pair {
                let (mut sx, mut sy) = (0usize, 0usize);
                for &v in &tri {
                    sx += v % stride;
                    sy += v / stride;
                }
                let cx = sx as f64 * inv_n / 3.0;
                let cy = sy as f64 * inv_n / 3.0;
                if !spec.in_perforation(cx, cy) {
                    kept.push(tri);
                }
            }
        }
    }
    if kept.is_empty() {
        return Err(Error::DomainEmpty);
    }

    let mut new_id = vec![usize::MAX; stride * stride];
    for tri in &kept {
        for &v in tri {
            new_id[v] = 0;
        }
    }
    let mut nodes = Vec::new();
    for (old, slot) in new_id.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = nodes.len();
            let (i, j) = (old % stride, old / stride);
            nodes.push([T::of_usize(i) / T::of_usize(n), T::of_usize(j) / T::of_usize(n)]);
        }
    }
    for tri in &mut kept {
        for v in tri.iter_mut() {
            *v = new_id[*v];
        }
    }
    let mesh = TriMesh {
        tags: vec![NodeTag::Interior; nodes.len()],
        nodes,
        triangles: kept,
        grid_n: Some(n),
    };
    let components = mesh.triangle_components();
    if components != 1 {
        return Err(Error::DomainDisconnected { components });
    }
    mesh.classify_boundary(spec)
}

fn edge_use(triangles: &[[usize; 3]]) -> HashMap<[usize; 2], Vec<usize>> {
    let mut map: HashMap<[usize; 2], Vec<usize>> = HashMap::with_capacity(triangles.len() * 2);
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            map.entry([a.min(b), a.max(b)]).or_default().push(t);
        }
    }
    map
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn count_roots(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_perforations, DiskPerforation};

    #[test]
    fn unperforated_two_by_two() {
        let m: TriMesh<f64> = triangulate(&PerforatedDomainSpec::unperforated(), 2).unwrap();
        assert_eq!(m.n_nodes(), 9);
        assert_eq!(m.n_triangles(), 8);
        let edges = m.boundary_edges();
        assert_eq!(edges.len(), 8);
        for [a, b] in edges {
            assert_eq!(m.tags[a], NodeTag::OuterDirichlet);
            assert_eq!(m.tags[b], NodeTag::OuterDirichlet);
        }
        assert_eq!(m.count_tag(NodeTag::OuterDirichlet), 8);
        assert_eq!(m.count_tag(NodeTag::PerforationNeumann), 0);
        assert_eq!(m.count_tag(NodeTag::Interior), 1);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        m.validate().unwrap();
    }

    #[test]
    fn centered_disk_triangle_count_matches_centroid_count() {
        let disk = DiskPerforation::new(0.5, 0.5, 0.3);
        let spec = PerforatedDomainSpec::with_disks(vec![disk]);
        let m: TriMesh<f64> = triangulate(&spec, 16).unwrap();
        // Brute force over every triangle of the full structured grid.
        let full: TriMesh<f64> = triangulate(&PerforatedDomainSpec::unperforated(), 16).unwrap();
        let inside = (0..full.n_triangles())
            .filter(|&t| {
                let c = full.centroid(t);
                disk.contains(c[0], c[1])
            })
            .count();
        assert_eq!(full.n_triangles(), 512);
        assert!(inside > 0);
        assert_eq!(m.n_triangles(), 512 - inside);
        m.validate().unwrap();
        // Removed area is exactly the area of removed triangles.
        let removed = inside as f64 / 512.0;
        assert!((m.total_area() - (1.0 - removed)).abs() < 1e-12);
    }

    #[test]
    fn hole_boundary_nodes_are_neumann() {
        let spec = PerforatedDomainSpec::with_disks(vec![DiskPerforation::new(0.5, 0.5, 0.3)]);
        let m: TriMesh<f64> = triangulate(&spec, 16).unwrap();
        let mut hole_nodes = 0;
        for [a, b] in m.boundary_edges() {
            for v in [a, b] {
                let [x, y] = m.nodes[v];
                if !on_outer_square(x, y) {
                    hole_nodes += 1;
                    assert_eq!(m.tags[v], NodeTag::PerforationNeumann);
                }
            }
        }
        assert!(hole_nodes > 0);
        assert_eq!(m.count_tag(NodeTag::OuterDirichlet), 64);
    }

    #[test]
    fn covering_disk_empties_domain() {
        let mut spec = PerforatedDomainSpec::with_disks(vec![DiskPerforation::new(0.5, 0.5, 2.0)]);
        spec.allow_boundary_clip = true;
        assert!(matches!(triangulate::<f64>(&spec, 8), Err(Error::DomainEmpty)));
    }

    #[test]
    fn clipped_disk_keeps_dirichlet_precedence() {
        let mut spec = PerforatedDomainSpec::with_disks(vec![DiskPerforation::new(0.0, 0.5, 0.2)]);
        spec.allow_boundary_clip = true;
        let m: TriMesh<f64> = triangulate(&spec, 16).unwrap();
        let v = m
            .nodes
            .iter()
            .position(|p| p[0] == 0.0 && (p[1] - 0.25).abs() < 1e-12)
            .unwrap();
        assert_eq!(m.tags[v], NodeTag::OuterDirichlet);
        // A node of the clipped hole rim on x = 0 adjacent to hole boundary edges.
        for [a, b] in m.boundary_edges() {
            for w in [a, b] {
                if m.nodes[w][0] == 0.0 {
                    assert_eq!(m.tags[w], NodeTag::OuterDirichlet);
                }
            }
        }
    }

    #[test]
    fn wall_of_disks_disconnects() {
        let mut disks = Vec::new();
        for k in 0..11 {
            disks.push(DiskPerforation::new(0.5, k as f64 * 0.1, 0.07));
        }
        let mut spec = PerforatedDomainSpec::with_disks(disks);
        spec.allow_boundary_clip = true;
        assert!(matches!(
            triangulate::<f64>(&spec, 32),
            Err(Error::DomainDisconnected { components: 2 })
        ));
    }

    #[test]
    fn classify_is_idempotent_and_deterministic() {
        let spec = generate_perforations(20, (0.02, 0.05), 0.03, 3).unwrap();
        let a: TriMesh<f64> = triangulate(&spec, 32).unwrap();
        let b: TriMesh<f64> = triangulate(&spec, 32).unwrap();
        assert_eq!(a, b);
        let again = a.clone().classify_boundary(&spec).unwrap();
        assert_eq!(again, a);
    }

    #[test]
    fn unknown_hole_is_inconsistent() {
        let spec = PerforatedDomainSpec::with_disks(vec![DiskPerforation::new(0.5, 0.5, 0.2)]);
        let m: TriMesh<f64> = triangulate(&spec, 16).unwrap();
        assert!(matches!(
            m.classify_boundary(&PerforatedDomainSpec::unperforated()),
            Err(Error::InconsistentGeometry { .. })
        ));
    }

    #[test]
    fn every_boundary_edge_is_tagged() {
        let spec = generate_perforations(30, (0.02, 0.05), 0.03, 11).unwrap();
        let m: TriMesh<f64> = triangulate(&spec, 40).unwrap();
        for [a, b] in m.boundary_edges() {
            assert_ne!(m.tags[a], NodeTag::Interior);
            assert_ne!(m.tags[b], NodeTag::Interior);
        }
        m.validate().unwrap();
    }
}
