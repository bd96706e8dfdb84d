//! Gmsh MSH 2.2 ASCII reader and writer (2-node lines and 3-node triangles).
//!
//! Boundary lines carry their role in the first (physical) tag:
//! [`OUTER_TAG`] for the Dirichlet outer square, [`PERFORATION_TAG`] for hole
//! boundaries.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::mesh::on_outer_square;
use crate::geometry::{NodeTag, TriMesh};
use crate::scalar::Scalar;

pub const OUTER_TAG: usize = 1;
pub const PERFORATION_TAG: usize = 2;
const DOMAIN_TAG: usize = 3;

const LINE: usize = 1;
const TRIANGLE: usize = 2;

/// Serializes the mesh with one tagged line element per boundary edge.
pub fn export_msh<T: Scalar>(mesh: &TriMesh<T>) -> String {
    let mut out = String::new();
    out.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n");
    let _ = writeln!(out, "$Nodes\n{}", mesh.n_nodes());
    for (i, [x, y]) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(out, "{} {} {} 0", i + 1, x, y);
    }
    out.push_str("$EndNodes\n");

    let edges = mesh.boundary_edges();
    let _ = writeln!(out, "$Elements\n{}", edges.len() + mesh.n_triangles());
    let mut id = 1;
    for [a, b] in &edges {
        let tag = if same_outer_side(mesh.nodes[*a], mesh.nodes[*b]) {
            OUTER_TAG
        } else {
            PERFORATION_TAG
        };
        let _ = writeln!(out, "{id} {LINE} 2 {tag} {tag} {} {}", a + 1, b + 1);
        id += 1;
    }
    for [a, b, c] in &mesh.triangles {
        let _ = writeln!(out, "{id} {TRIANGLE} 2 {DOMAIN_TAG} {DOMAIN_TAG} {} {} {}", a + 1, b + 1, c + 1);
        id += 1;
    }
    out.push_str("$EndElements\n");
    out
}

fn same_outer_side<T: Scalar>(p: [T; 2], q: [T; 2]) -> bool {
    let tol = T::of(super::mesh::BOUNDARY_TOL);
    let on = |a: T, b: T, v: T| (a - v).abs() <= tol && (b - v).abs() <= tol;
    on(p[0], q[0], T::zero()) || on(p[0], q[0], T::one()) || on(p[1], q[1], T::zero()) || on(p[1], q[1], T::one())
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_nonempty(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Some((i + 1, t));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_nonempty().ok_or_else(|| Error::Parse {
            line: self.last,
            message: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<N: std::str::FromStr>(line: usize, tok: Option<&str>) -> Result<N> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing field"))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad number '{tok}'")))
}

/// Reads an MSH 2.2 ASCII mesh.
///
/// Nodes not referenced by any triangle are dropped. Line elements with
/// physical tag 1 mark Dirichlet nodes, tag 2 perforation nodes; Dirichlet
/// wins where both meet. Remaining boundary nodes default to the natural
/// condition. Triangles are reoriented counter-clockwise.
pub fn import_msh<T: Scalar>(bytes: &[u8]) -> Result<TriMesh<T>> {
    let text = std::str::from_utf8(bytes).map_err(|e| parse_err(0, format!("not UTF-8: {e}")))?;
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };

    let mut coords: HashMap<usize, [f64; 2]> = HashMap::new();
    let mut node_order: Vec<usize> = Vec::new();
    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut tagged: Vec<(usize, [usize; 2])> = Vec::new();
    let mut saw_format = false;

    while let Some((ln, header)) = lines.next_nonempty() {
        match header {
            "$MeshFormat" => {
                let (ln, fmt) = lines.expect("format line")?;
                let mut it = fmt.split_whitespace();
                let version = it.next().unwrap_or_default();
                if version != "2.2" {
                    return Err(Error::UnsupportedVersion(version.to_string()));
                }
                let file_type: usize = num(ln, it.next())?;
                if file_type != 0 {
                    return Err(Error::UnsupportedVersion(format!("{version} binary")));
                }
                lines.expect("$EndMeshFormat")?;
                saw_format = true;
            }
            "$Nodes" => {
                let (ln, c) = lines.expect("node count")?;
                let count: usize = num(ln, Some(c))?;
                for _ in 0..count {
                    let (ln, l) = lines.expect("node")?;
                    let mut it = l.split_whitespace();
                    let id: usize = num(ln, it.next())?;
                    let x: f64 = num(ln, it.next())?;
                    let y: f64 = num(ln, it.next())?;
                    if coords.insert(id, [x, y]).is_some() {
                        return Err(parse_err(ln, format!("duplicate node id {id}")));
                    }
                    node_order.push(id);
                }
                let (ln, end) = lines.expect("$EndNodes")?;
                if end != "$EndNodes" {
                    return Err(parse_err(ln, "node count does not match section"));
                }
            }
            "$Elements" => {
                let (ln, c) = lines.expect("element count")?;
                let count: usize = num(ln, Some(c))?;
                for _ in 0..count {
                    let (ln, l) = lines.expect("element")?;
                    let fields: Vec<&str> = l.split_whitespace().collect();
                    let mut it = fields.iter().copied();
                    let id: usize = num(ln, it.next())?;
                    let ty: usize = num(ln, it.next())?;
                    let ntags: usize = num(ln, it.next())?;
                    let mut tags = Vec::with_capacity(ntags);
                    for _ in 0..ntags {
                        tags.push(num::<usize>(ln, it.next())?);
                    }
                    let verts: Vec<usize> = it.map(|t| num(ln, Some(t))).collect::<Result<_>>()?;
                    match ty {
                        LINE => {
                            if verts.len() != 2 {
                                return Err(parse_err(ln, "line element needs 2 nodes"));
                            }
                            let Some(&physical) = tags.first() else {
                                return Err(Error::MissingTags { element: id });
                            };
                            tagged.push((physical, [verts[0], verts[1]]));
                        }
                        TRIANGLE => {
                            if verts.len() != 3 {
                                return Err(parse_err(ln, "triangle element needs 3 nodes"));
                            }
                            tris.push([verts[0], verts[1], verts[2]]);
                        }
                        _ => {}
                    }
                }
                let (ln, end) = lines.expect("$EndElements")?;
                if end != "$EndElements" {
                    return Err(parse_err(ln, "element count does not match section"));
                }
            }
            s if s.starts_with('$') => {
                // Unknown section: skip to its end marker.
                let end = format!("$End{}", &s[1..]);
                loop {
                    let (_, l) = lines.expect(&end)?;
                    if l == end {
                        break;
                    }
                }
            }
            other => return Err(parse_err(ln, format!("unexpected line '{other}'"))),
        }
    }
    if !saw_format {
        return Err(parse_err(0, "missing $MeshFormat section"));
    }
    if tris.is_empty() {
        return Err(parse_err(lines.last, "mesh contains no triangle"));
    }

    let mut used: HashMap<usize, usize> = HashMap::new();
    for tri in &tris {
        for v in tri {
            if !coords.contains_key(v) {
                return Err(parse_err(0, format!("triangle references unknown node {v}")));
            }
            used.insert(*v, usize::MAX);
        }
    }
    let mut nodes = Vec::with_capacity(used.len());
    for id in &node_order {
        if let Some(slot) = used.get_mut(id) {
            *slot = nodes.len();
            let [x, y] = coords[id];
            nodes.push([T::of(x), T::of(y)]);
        }
    }
    let mut triangles: Vec<[usize; 3]> = tris.iter().map(|t| t.map(|v| used[&v])).collect();

    let mut mesh = TriMesh {
        tags: vec![NodeTag::Interior; nodes.len()],
        nodes,
        triangles: Vec::new(),
        grid_n: None,
    };
    for tri in &mut triangles {
        let [p, q, r] = tri.map(|v| mesh.nodes[v]);
        let cross = (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]);
        if cross < T::zero() {
            tri.swap(1, 2);
        }
    }
    mesh.triangles = triangles;

    for (physical, ends) in &tagged {
        for v in ends {
            let Some(&local) = used.get(v) else { continue };
            let tag = match *physical {
                OUTER_TAG => NodeTag::OuterDirichlet,
                PERFORATION_TAG => NodeTag::PerforationNeumann,
                _ => continue,
            };
            if mesh.tags[local] != NodeTag::OuterDirichlet {
                mesh.tags[local] = tag;
            }
        }
    }
    for (v, on) in mesh.boundary_nodes().into_iter().enumerate() {
        if on && mesh.tags[v] == NodeTag::Interior {
            let [x, y] = mesh.nodes[v];
            mesh.tags[v] = if tagged.is_empty() && on_outer_square(x.as_f64(), y.as_f64()) {
                NodeTag::OuterDirichlet
            } else {
                NodeTag::PerforationNeumann
            };
        }
    }
    mesh.validate()?;
    Ok(mesh)
}
