//! Command bodies operating on a resolved [`RunConfig`].

use std::fs;
use std::path::Path;

use perfcem::cem::{BasisBuilder, LayerRule, Support};
use perfcem::geometry::{triangulate, NodeTag};
use perfcem::ms::{decay_rows_to_csv, rows_to_csv, CoarseSetup, DecayRow, StudyRow};
use perfcem::vtk::write_vtk;
use perfcem::{Field, FineProblem, Grid, Mesh};
use serde::Serialize;
use serde_json::json;

use crate::config::{DomainConfig, LayersConfig, RunConfig};
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    outputs: Vec<String>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn prepare_out(c: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&c.out).map_err(|e| CliError::io(&c.out, e))
}

fn write_manifest(command: &str, c: &RunConfig, outputs: &[&str]) -> Result<(), CliError> {
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: c,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&c.out.join(MANIFEST), &text)
}

fn problem(c: &RunConfig) -> Result<FineProblem, CliError> {
    let mesh: Mesh = c.mesh()?;
    let source = c.source.to_source(&mesh);
    Ok(FineProblem::new(mesh, &source)?)
}

/// Node, triangle and coarse-grid counts, with the smallest κ̃ per coarse size.
pub fn mesh_stats(c: &RunConfig, mesh: &Mesh) -> Result<serde_json::Value, CliError> {
    let mut grids = Vec::new();
    for nb in c.blocks_per_side()? {
        let grid = Grid::build(mesh, nb)?;
        let min_kappa = grid.kappa_tilde(mesh).into_iter().fold(f64::INFINITY, f64::min);
        let mut g = serde_json::to_value(grid.summary()).expect("summary serializes");
        g["min_kappa_tilde"] = json!(min_kappa);
        grids.push(g);
    }
    Ok(json!({
        "nodes": mesh.n_nodes(),
        "triangles": mesh.n_triangles(),
        "outer_dirichlet_nodes": mesh.count_tag(NodeTag::OuterDirichlet),
        "perforation_nodes": mesh.count_tag(NodeTag::PerforationNeumann),
        "area": mesh.total_area(),
        "coarse": grids,
    }))
}

/// Domain spec JSON and mesh statistics; with `to_dir` the spec and a
/// manifest are also written to the output directory.
pub fn generate(c: &RunConfig, to_dir: bool) -> Result<(String, serde_json::Value), CliError> {
    c.blocks_per_side()?;
    let spec = c
        .domain_spec()?
        .ok_or_else(|| CliError::config("generate does not apply to an imported mesh"))?;
    let text = spec.to_json()?;
    let mesh: Mesh = triangulate(&spec, c.fine_n)?;
    let stats = mesh_stats(c, &mesh)?;
    if to_dir {
        prepare_out(c)?;
        write_file(&c.out.join("domain.json"), &text)?;
        write_manifest("generate", c, &["domain.json"])?;
    }
    Ok((text, stats))
}

pub fn set_disks(c: &mut RunConfig, count: usize) -> Result<(), CliError> {
    match &mut c.domain {
        DomainConfig::Generate { disks, .. } => {
            *disks = count;
            Ok(())
        }
        _ => Err(CliError::config("--disks needs a generated domain")),
    }
}

pub fn mesh_info(c: &RunConfig) -> Result<serde_json::Value, CliError> {
    c.blocks_per_side()?;
    let mesh = c.mesh()?;
    mesh_stats(c, &mesh)
}

/// `solve` and `export-basis` use only the first H, so a layer list of
/// another length contributes its first entry.
pub fn single_cell_layers(c: &mut RunConfig) {
    if let LayersConfig::Schedule(v) = &c.layers {
        if v.len() != c.h.len() && !v.is_empty() {
            c.layers = LayersConfig::Uniform(v[0]);
        }
    }
}

fn first_cell(c: &RunConfig) -> Result<(usize, LayerRule), CliError> {
    Ok(c.schedule()?.into_iter().next().expect("non-empty schedule"))
}

/// Writes `u_h.vtk`, `u_ms.vtk` (one array per variant) and `errors.csv`.
pub fn solve(c: &RunConfig) -> Result<Vec<StudyRow>, CliError> {
    c.validate()?;
    let (nb, rule) = first_cell(c)?;
    let p = problem(c)?;
    let setup = CoarseSetup::new(&p.mesh, nb, c.eigs)?;
    let mut rows = Vec::new();
    let mut fields: Vec<(String, Field)> = Vec::new();
    for &variant in &c.variants {
        let r = p.run(&setup, &rule, variant, c.eigs, c.timing)?;
        rows.push(r.row);
        fields.push((format!("u_ms_{variant}"), r.solution.u_ms));
    }
    prepare_out(c)?;
    write_file(&c.out.join("u_h.vtk"), &write_vtk(&p.mesh, "fine solution", &[("u_h", &p.reference)]))?;
    let named: Vec<(&str, &Field)> = fields.iter().map(|(n, f)| (n.as_str(), f)).collect();
    write_file(&c.out.join("u_ms.vtk"), &write_vtk(&p.mesh, "multiscale solution", &named))?;
    write_file(&c.out.join("errors.csv"), &rows_to_csv(&rows))?;
    write_manifest("solve", c, &["u_h.vtk", "u_ms.vtk", "errors.csv"])?;
    Ok(rows)
}

/// Writes `convergence.csv` over the (H, m) schedule.
pub fn convergence(c: &RunConfig) -> Result<Vec<StudyRow>, CliError> {
    c.validate()?;
    let schedule = c.schedule()?;
    let p = problem(c)?;
    let rows = p.convergence_study(&schedule, c.eigs, &c.variants, c.timing)?;
    prepare_out(c)?;
    write_file(&c.out.join("convergence.csv"), &rows_to_csv(&rows))?;
    write_manifest("study convergence", c, &["convergence.csv"])?;
    Ok(rows)
}

/// Writes `decay.csv`: the layer list at the first H, for every variant.
pub fn decay(c: &RunConfig) -> Result<Vec<DecayRow>, CliError> {
    if c.decay_layers.is_empty() {
        return Err(CliError::config("the decay layer list is empty"));
    }
    c.validate()?;
    let nb = c.blocks_per_side()?[0];
    let p = problem(c)?;
    let mut rows = Vec::new();
    for &variant in &c.variants {
        rows.extend(p.decay_study(nb, c.eigs, variant, &c.decay_layers, c.timing)?);
    }
    prepare_out(c)?;
    write_file(&c.out.join("decay.csv"), &decay_rows_to_csv(&rows))?;
    write_manifest("study decay", c, &["decay.csv"])?;
    Ok(rows)
}

/// Writes `basis_block{i}.vtk` with every basis function of block `i`.
pub fn export_basis(c: &RunConfig, block: usize) -> Result<(), CliError> {
    c.validate()?;
    let (nb, rule) = first_cell(c)?;
    let mesh = c.mesh()?;
    let setup = CoarseSetup::new(&mesh, nb, c.eigs)?;
    if block >= setup.grid.n_blocks() {
        return Err(CliError::config(format!(
            "block {block} out of range ({} blocks)",
            setup.grid.n_blocks()
        )));
    }
    let aux = setup
        .aux
        .block(block)
        .ok_or_else(|| CliError::config(format!("block {block} is empty")))?;
    let builder = BasisBuilder::new(&mesh, &setup.grid, &setup.aux)?;
    let support = Support::Layers(rule.layers(block));
    let mut fields: Vec<(String, Field)> = Vec::new();
    for &variant in &c.variants {
        for eig in 0..aux.len() {
            let psi = builder.build(block, eig, support, variant)?;
            fields.push((format!("psi_{variant}_{eig}"), psi.coefficients));
        }
    }
    let name = format!("basis_block{block}.vtk");
    let named: Vec<(&str, &Field)> = fields.iter().map(|(n, f)| (n.as_str(), f)).collect();
    prepare_out(c)?;
    write_file(&c.out.join(&name), &write_vtk(&mesh, &format!("basis of block {block}"), &named))?;
    write_manifest("export-basis", c, &[&name])
}
