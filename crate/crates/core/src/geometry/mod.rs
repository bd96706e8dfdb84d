//! Perforated unit-square domains and their triangulations.

mod domain;
mod mesh;
mod msh;

pub use domain::{
    generate_perforations, DiskPerforation, PerforatedDomainSpec, DEFAULT_DISK_COUNT, DEFAULT_MIN_GAP,
    DEFAULT_RADIUS_RANGE,
};
pub use mesh::{triangulate, NodeTag, TriMesh, BOUNDARY_TOL};
pub use msh::{export_msh, import_msh, OUTER_TAG, PERFORATION_TAG};
