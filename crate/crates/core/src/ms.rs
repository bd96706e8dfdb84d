//! Coarse Galerkin solve in the multiscale space, error measurement and the
//! convergence and layer studies.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cem::{BasisBuilder, LayerRule, MsBasisSet, Variant};
use crate::coarse::CoarseGrid;
use crate::error::{Error, Result};
use crate::fem::{FemSystem, Norms, RelativeErrors, ScalarField, Source};
use crate::geometry::TriMesh;
use crate::linalg::{conjugate_gradient, DenseCholesky, SparseMatrix};
use crate::scalar::{max_abs, Scalar};
use crate::spectral::AuxSpace;

/// Relative pivot below which a basis function counts as dependent on earlier ones.
const DEPENDENT_BASIS_TOL: f64 = 1e-12;
/// Coarse systems larger than this are solved by CG instead of Cholesky.
pub const DENSE_COARSE_LIMIT: usize = 10_000;
/// Relative residual of the fine reference solve.
pub const REFERENCE_TOL: f64 = 1e-10;

/// CSV header of study tables.
pub const CSV_HEADER: &str = "H,m,variant,l,e_L2,e_H1,n_fine_dofs,n_ms_dofs,wall_ms";

#[derive(Debug, Clone)]
pub struct MsSolution<T> {
    /// `u_H`, one coefficient per basis function.
    pub coarse: Vec<T>,
    /// `Rᵀ·u_H` on all mesh nodes.
    pub u_ms: ScalarField<T>,
    /// `‖R·(F − A·u_ms)‖_∞ / ‖F‖_∞` (zero for a zero load).
    pub galerkin_residual: T,
    /// Basis functions skipped as linear combinations of earlier ones.
    pub dependent_rows: usize,
}

/// Solves `R·A·Rᵀ·u_H = R·F` and downscales.
///
/// Basis functions in the span of earlier ones get a zero coefficient,
/// which leaves `u_ms` unchanged.
pub fn solve_multiscale<T: Scalar>(basis: &MsBasisSet<T>, system: &FemSystem<T>) -> Result<MsSolution<T>> {
    if basis.n_free() != system.n_free() {
        return Err(Error::InvalidArgument(format!(
            "basis over {} unknowns, system over {}",
            basis.n_free(),
            system.n_free()
        )));
    }
    let ac = basis.galerkin_matrix(&system.stiffness);
    let fc = basis.apply(&system.load);
    let (coarse, dependent_rows) = if basis.n_rows() <= DENSE_COARSE_LIMIT {
        let chol = DenseCholesky::new_deflated(&ac, T::of(DEPENDENT_BASIS_TOL))?;
        (chol.solve(&fc), chol.dropped().len())
    } else {
        let sparse = SparseMatrix::from_dense(&ac);
        (conjugate_gradient(&sparse, &fc, T::of(1e-12), 10 * basis.n_rows())?, 0)
    };
    let u_free = basis.apply_transpose(&coarse);
    let au = system.stiffness.matvec(&u_free);
    let r: Vec<T> = system.load.iter().zip(&au).map(|(f, a)| *f - *a).collect();
    let f_norm = max_abs(&system.load);
    let galerkin_residual = if f_norm > T::zero() {
        max_abs(&basis.apply(&r)) / f_norm
    } else {
        T::zero()
    };
    Ok(MsSolution {
        coarse,
        u_ms: system.dof_map.extend(&u_free),
        galerkin_residual,
        dependent_rows,
    })
}

/// How many oversampling layers to use at a given coarse size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerSpec {
    Uniform(usize),
    /// `ceil(log2(1/H))`.
    Log,
    PerBlock(Vec<usize>),
}

impl LayerSpec {
    pub fn resolve(&self, blocks_per_side: usize) -> LayerRule {
        match self {
            LayerSpec::Uniform(m) => LayerRule::Uniform(*m),
            LayerSpec::Log => LayerRule::Uniform(log_layers(blocks_per_side)),
            LayerSpec::PerBlock(v) => LayerRule::PerBlock(v.clone()),
        }
    }
}

/// `ceil(log2(blocks_per_side))`.
pub fn log_layers(blocks_per_side: usize) -> usize {
    blocks_per_side.next_power_of_two().trailing_zeros() as usize
}

fn layer_label(rule: &LayerRule) -> String {
    match rule {
        LayerRule::Uniform(m) => m.to_string(),
        LayerRule::PerBlock(_) => "per-block".into(),
    }
}

/// One experiment cell of a study table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    #[serde(rename = "H")]
    pub h: f64,
    pub m: String,
    pub variant: Variant,
    pub l: usize,
    #[serde(rename = "e_L2")]
    pub e_l2: f64,
    #[serde(rename = "e_H1")]
    pub e_h1: f64,
    pub n_fine_dofs: usize,
    pub n_ms_dofs: usize,
    pub wall_ms: Option<u128>,
}

impl StudyRow {
    pub fn csv_line(&self) -> String {
        let wall = self.wall_ms.map(|w| w.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{:e},{:e},{},{},{}",
            self.h, self.m, self.variant, self.l, self.e_l2, self.e_h1, self.n_fine_dofs, self.n_ms_dofs, wall
        )
    }
}

/// Header plus one line per row.
pub fn rows_to_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Coarse grid, weight and auxiliary space for one coarse size.
#[derive(Debug, Clone)]
pub struct CoarseSetup<T> {
    pub grid: CoarseGrid<T>,
    pub kappa: Vec<T>,
    pub aux: AuxSpace<T>,
}

impl<T: Scalar> CoarseSetup<T> {
    pub fn new(mesh: &TriMesh<T>, blocks_per_side: usize, l: usize) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidArgument("at least one eigenfunction per block is required".into()));
        }
        let grid = CoarseGrid::build(mesh, blocks_per_side)?;
        let kappa = grid.kappa_tilde(mesh);
        let aux = AuxSpace::build(&grid, mesh, &kappa, l)?;
        Ok(CoarseSetup { grid, kappa, aux })
    }
}

/// A fine problem with its reference solution.
#[derive(Debug, Clone)]
pub struct Problem<T> {
    pub mesh: TriMesh<T>,
    pub system: FemSystem<T>,
    pub reference: ScalarField<T>,
    pub norms: Norms<T>,
}

/// Result of one multiscale run against the reference.
#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub solution: MsSolution<T>,
    pub basis: MsBasisSet<T>,
    pub errors: RelativeErrors,
    pub row: StudyRow,
}

impl<T: Scalar> Problem<T> {
    pub fn new(mesh: TriMesh<T>, source: &Source<T>) -> Result<Self> {
        let system = FemSystem::assemble(&mesh, source)?;
        let reference = system.solve(T::of(REFERENCE_TOL))?;
        let norms = Norms::new(&mesh)?;
        Ok(Problem {
            mesh,
            system,
            reference,
            norms,
        })
    }

    pub fn n_fine_dofs(&self) -> usize {
        self.system.n_free()
    }

    /// Builds the basis, solves, and measures errors.
    ///
    /// A zero reference yields zero errors rather than an error, so that
    /// `f ≡ 0` runs still produce a table.
    pub fn run(&self, setup: &CoarseSetup<T>, layers: &LayerRule, variant: Variant, l: usize, timing: bool) -> Result<RunResult<T>> {
        let start = Instant::now();
        let builder = BasisBuilder::new(&self.mesh, &setup.grid, &setup.aux)?;
        let basis = MsBasisSet::build(&builder, layers, variant)?;
        let solution = solve_multiscale(&basis, &self.system)?;
        let wall_ms = timing.then(|| start.elapsed().as_millis());
        let errors = match self.norms.relative_errors(&self.reference, &solution.u_ms) {
            Err(Error::ZeroReference) if self.norms.energy(&solution.u_ms) == T::zero() => RelativeErrors { l2: 0.0, energy: 0.0 },
            other => other?,
        };
        let row = StudyRow {
            h: setup.grid.h().as_f64(),
            m: layer_label(layers),
            variant,
            l,
            e_l2: errors.l2,
            e_h1: errors.energy,
            n_fine_dofs: self.n_fine_dofs(),
            n_ms_dofs: basis.n_rows(),
            wall_ms,
        };
        Ok(RunResult {
            solution,
            basis,
            errors,
            row,
        })
    }

    /// One row per `(blocks_per_side, layers)` cell and variant.
    pub fn convergence_study(
        &self,
        schedule: &[(usize, LayerRule)],
        l: usize,
        variants: &[Variant],
        timing: bool,
    ) -> Result<Vec<StudyRow>> {
        let mut rows = Vec::new();
        for (nb, layers) in schedule {
            let setup = CoarseSetup::new(&self.mesh, *nb, l)?;
            for &variant in variants {
                rows.push(self.run(&setup, layers, variant, l, timing)?.row);
            }
        }
        Ok(rows)
    }

    /// Errors against `m` at fixed `H`; `max_basis_delta` is the largest
    /// energy-norm change of any basis function relative to the largest `m`.
    pub fn decay_study(&self, blocks_per_side: usize, l: usize, variant: Variant, layers: &[usize], timing: bool) -> Result<Vec<DecayRow>> {
        let setup = CoarseSetup::new(&self.mesh, blocks_per_side, l)?;
        let runs: Vec<RunResult<T>> = layers
            .iter()
            .map(|&m| self.run(&setup, &LayerRule::Uniform(m), variant, l, timing))
            .collect::<Result<_>>()?;
        let Some(last) = layers.iter().enumerate().max_by_key(|(_, m)| **m).map(|(k, _)| k) else {
            return Ok(Vec::new());
        };
        let reference = &runs[last].basis;
        Ok(runs
            .iter()
            .map(|r| DecayRow {
                row: r.row.clone(),
                max_basis_delta: max_row_delta(&r.basis, reference, &self.system.stiffness).as_f64(),
            })
            .collect())
    }
}

/// Largest `‖ψ_r − φ_r‖_a` over matching rows of two basis sets.
pub fn max_row_delta<T: Scalar>(a: &MsBasisSet<T>, b: &MsBasisSet<T>, stiffness: &SparseMatrix<T>) -> T {
    let n = a.n_free();
    let mut worst = T::zero();
    for r in 0..a.n_rows().min(b.n_rows()) {
        let mut d = vec![T::zero(); n];
        let (c, v) = a.row(r);
        for (&k, &x) in c.iter().zip(v) {
            d[k] += x;
        }
        let (c, v) = b.row(r);
        for (&k, &x) in c.iter().zip(v) {
            d[k] -= x;
        }
        worst = worst.max(stiffness.quadratic_form(&d).max(T::zero()).sqrt());
    }
    worst
}

/// A study row with the basis localization measure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayRow {
    #[serde(flatten)]
    pub row: StudyRow,
    pub max_basis_delta: f64,
}

pub fn decay_rows_to_csv(rows: &[DecayRow]) -> String {
    let mut out = format!("{CSV_HEADER},max_basis_delta\n");
    for r in rows {
        let _ = writeln!(out, "{},{:e}", r.row.csv_line(), r.max_basis_delta);
    }
    out
}
