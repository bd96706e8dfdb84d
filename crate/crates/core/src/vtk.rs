//! Legacy ASCII VTK output of nodal fields on a triangulation.

use std::fmt::Write as _;

use crate::fem::ScalarField;
use crate::geometry::TriMesh;
use crate::scalar::Scalar;

const VTK_TRIANGLE: u8 = 5;

/// Renders an `UNSTRUCTURED_GRID` with one `POINT_DATA` scalar array per field.
pub fn write_vtk<T: Scalar>(mesh: &TriMesh<T>, title: &str, fields: &[(&str, &ScalarField<T>)]) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    // The title line may not contain newlines.
    let _ = writeln!(out, "{}", title.replace('\n', " "));
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} float", mesh.n_nodes());
    for [x, y] in &mesh.nodes {
        let _ = writeln!(out, "{x} {y} 0");
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(out, "CELLS {nt} {}", 4 * nt);
    for [a, b, c] in &mesh.triangles {
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(out, "{VTK_TRIANGLE}");
    }
    if !fields.is_empty() {
        let _ = writeln!(out, "POINT_DATA {}", mesh.n_nodes());
        for (name, field) in fields {
            assert_eq!(field.len(), mesh.n_nodes(), "field '{name}' length");
            let _ = writeln!(out, "SCALARS {} float 1\nLOOKUP_TABLE default", name.replace(' ', "_"));
            for v in field.values() {
                let _ = writeln!(out, "{v}");
            }
        }
    }
    out
}
