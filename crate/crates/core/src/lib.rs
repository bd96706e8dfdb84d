//! Constraint energy minimizing generalized multiscale finite elements for
//! the Poisson equation on perforated unit-square domains.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision types used by the command line.

// `!(x > 0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cem;
pub mod coarse;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod ms;
pub mod scalar;
pub mod spectral;
pub mod vtk;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;
pub type Mesh = geometry::TriMesh<Real>;
pub type Field = fem::ScalarField<Real>;
pub type Grid = coarse::CoarseGrid<Real>;
pub type Aux = spectral::AuxSpace<Real>;
pub type BasisSet = cem::MsBasisSet<Real>;
pub type Solution = ms::MsSolution<Real>;
pub type FineProblem = ms::Problem<Real>;
