//! Run configuration: JSON file, command-line overrides, and resolution
//! into a mesh, source and experiment schedule.

use std::path::{Path, PathBuf};

use perfcem::cem::{LayerRule, Variant};
use perfcem::fem::RectangleSource;
use perfcem::geometry::{
    generate_perforations, import_msh, triangulate, PerforatedDomainSpec, DEFAULT_DISK_COUNT, DEFAULT_MIN_GAP,
    DEFAULT_RADIUS_RANGE,
};
use perfcem::ms::log_layers;
use perfcem::spectral::DEFAULT_EIGS;
use perfcem::Mesh;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_FINE_N: usize = 128;

/// Where the domain comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainConfig {
    /// Random disks from the generator.
    Generate {
        #[serde(default = "default_disks")]
        disks: usize,
        #[serde(default = "default_rmin")]
        radius_min: f64,
        #[serde(default = "default_rmax")]
        radius_max: f64,
        #[serde(default = "default_gap")]
        min_gap: f64,
    },
    /// Inline disk list.
    Spec(PerforatedDomainSpec),
    /// Path to a domain spec JSON file.
    SpecPath(PathBuf),
    /// Path to a Gmsh 2.2 ASCII mesh.
    MshPath(PathBuf),
}

fn default_disks() -> usize {
    DEFAULT_DISK_COUNT
}
fn default_rmin() -> f64 {
    DEFAULT_RADIUS_RANGE.0
}
fn default_rmax() -> f64 {
    DEFAULT_RADIUS_RANGE.1
}
fn default_gap() -> f64 {
    DEFAULT_MIN_GAP
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig::Generate {
            disks: DEFAULT_DISK_COUNT,
            radius_min: DEFAULT_RADIUS_RANGE.0,
            radius_max: DEFAULT_RADIUS_RANGE.1,
            min_gap: DEFAULT_MIN_GAP,
        }
    }
}

/// Oversampling layers as written in a config or on the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayersConfig {
    Uniform(usize),
    /// The string `"log"`: `ceil(log2(1/H))`.
    Named(String),
    /// One value per entry of the H list (or the layer list of a decay study).
    Schedule(Vec<usize>),
    PerBlock { per_block: Vec<usize> },
}

impl LayersConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let t = text.trim();
        if t == "log" {
            return Ok(LayersConfig::Named("log".into()));
        }
        let values = t
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| CliError::config(format!("--layers expects an integer, 'log' or a comma list, got '{text}'")))?;
        Ok(match values.as_slice() {
            [m] if !t.contains(',') => LayersConfig::Uniform(*m),
            _ => LayersConfig::Schedule(values),
        })
    }
}

/// Full description of a run; also stored in `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_fine_n")]
    pub fine_n: usize,
    #[serde(default = "RectangleSource::four_squares")]
    pub source: RectangleSource,
    /// Coarse sizes `H`; each `1/H` must be an integer dividing `fine_n`.
    #[serde(default = "default_h", rename = "H")]
    pub h: Vec<f64>,
    #[serde(default = "default_layers")]
    pub layers: LayersConfig,
    #[serde(default = "default_eigs")]
    pub eigs: usize,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    /// Layer list of `study decay`.
    #[serde(default = "default_decay_layers")]
    pub decay_layers: Vec<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Record wall-clock times in CSV output (makes output run-dependent).
    #[serde(default)]
    pub timing: bool,
}

fn default_seed() -> u64 {
    42
}
fn default_fine_n() -> usize {
    DEFAULT_FINE_N
}
fn default_h() -> Vec<f64> {
    vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0]
}
fn default_layers() -> LayersConfig {
    LayersConfig::Schedule(vec![2, 3, 4])
}
fn default_eigs() -> usize {
    DEFAULT_EIGS
}
fn default_variants() -> Vec<Variant> {
    vec![Variant::Constraint, Variant::Relaxed]
}
fn default_decay_layers() -> Vec<usize> {
    vec![1, 2, 3, 4]
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: DomainConfig::default(),
            seed: default_seed(),
            fine_n: default_fine_n(),
            source: RectangleSource::four_squares(),
            h: default_h(),
            layers: default_layers(),
            eigs: default_eigs(),
            variants: default_variants(),
            decay_layers: default_decay_layers(),
            out: default_out(),
            timing: false,
        }
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

impl RunConfig {
    /// Reads a config file, or the `config` entry of a run manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_text(path)?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let value = match value.get("config") {
            Some(inner) if value.get("command").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Number of coarse blocks per side for each entry of the H list.
    pub fn blocks_per_side(&self) -> Result<Vec<usize>, CliError> {
        if self.h.is_empty() {
            return Err(CliError::config("the H list is empty"));
        }
        self.h
            .iter()
            .map(|&h| {
                let inv = 1.0 / h;
                let nb = inv.round();
                if !(h > 0.0) || (inv - nb).abs() > 1e-9 * inv || nb < 1.0 {
                    return Err(CliError::config(format!("H = {h} is not the reciprocal of a positive integer")));
                }
                let nb = nb as usize;
                if !self.fine_n.is_multiple_of(nb) {
                    return Err(CliError::config(format!(
                        "H = 1/{nb} does not nest with fine n = {}",
                        self.fine_n
                    )));
                }
                Ok(nb)
            })
            .collect()
    }

    /// `(blocks_per_side, layers)` for every H.
    pub fn schedule(&self) -> Result<Vec<(usize, LayerRule)>, CliError> {
        let nbs = self.blocks_per_side()?;
        let rules: Vec<LayerRule> = match &self.layers {
            LayersConfig::Uniform(m) => vec![LayerRule::Uniform(*m); nbs.len()],
            LayersConfig::Named(name) if name == "log" => nbs.iter().map(|&nb| LayerRule::Uniform(log_layers(nb))).collect(),
            LayersConfig::Named(name) => return Err(CliError::config(format!("unknown layer rule '{name}'"))),
            LayersConfig::Schedule(v) => {
                if v.len() != nbs.len() {
                    return Err(CliError::config(format!(
                        "{} layer counts for {} coarse sizes",
                        v.len(),
                        nbs.len()
                    )));
                }
                v.iter().map(|&m| LayerRule::Uniform(m)).collect()
            }
            LayersConfig::PerBlock { per_block } => {
                if nbs.len() != 1 {
                    return Err(CliError::config("per-block layers need exactly one coarse size"));
                }
                vec![LayerRule::PerBlock(per_block.clone())]
            }
        };
        Ok(nbs.into_iter().zip(rules).collect())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.fine_n < 2 {
            return Err(CliError::config("fine_n must be at least 2"));
        }
        if self.eigs == 0 {
            return Err(CliError::config("eigs must be at least 1"));
        }
        if self.variants.is_empty() {
            return Err(CliError::config("no variant selected"));
        }
        self.source.validate().map_err(CliError::from)?;
        self.blocks_per_side()?;
        Ok(())
    }

    /// The domain spec, if the domain is not an imported mesh.
    pub fn domain_spec(&self) -> Result<Option<PerforatedDomainSpec>, CliError> {
        Ok(match &self.domain {
            DomainConfig::Generate {
                disks,
                radius_min,
                radius_max,
                min_gap,
            } => Some(generate_perforations(*disks, (*radius_min, *radius_max), *min_gap, self.seed)?),
            DomainConfig::Spec(spec) => Some(spec.clone()),
            DomainConfig::SpecPath(path) => {
                let text = read_text(path)?;
                Some(PerforatedDomainSpec::from_json(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?)
            }
            DomainConfig::MshPath(_) => None,
        })
    }

    pub fn mesh(&self) -> Result<Mesh, CliError> {
        match &self.domain {
            DomainConfig::MshPath(path) => {
                let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
                Ok(import_msh(&bytes)?)
            }
            _ => {
                let spec = self.domain_spec()?.expect("generated or inline domain");
                Ok(triangulate(&spec, self.fine_n)?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_flag_forms() {
        assert_eq!(LayersConfig::parse("3").unwrap(), LayersConfig::Uniform(3));
        assert_eq!(LayersConfig::parse("log").unwrap(), LayersConfig::Named("log".into()));
        assert_eq!(LayersConfig::parse("2,3,4").unwrap(), LayersConfig::Schedule(vec![2, 3, 4]));
        assert!(LayersConfig::parse("two").is_err());
    }

    #[test]
    fn default_schedule() {
        let c = RunConfig::default();
        let s = c.schedule().unwrap();
        assert_eq!(s, vec![(8, LayerRule::Uniform(2)), (16, LayerRule::Uniform(3)), (32, LayerRule::Uniform(4))]);
        let mut log = c.clone();
        log.layers = LayersConfig::Named("log".into());
        assert_eq!(log.schedule().unwrap()[2], (32, LayerRule::Uniform(5)));
    }

    #[test]
    fn non_nested_h_is_a_config_error() {
        let c = RunConfig {
            h: vec![0.1],
            ..RunConfig::default()
        };
        assert!(c.blocks_per_side().is_err());
        let c = RunConfig {
            h: vec![0.3],
            ..RunConfig::default()
        };
        assert!(c.blocks_per_side().is_err());
    }

    #[test]
    fn json_round_trip_and_partial_configs() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        let partial: RunConfig =
            serde_json::from_str(r#"{"fine_n": 32, "H": [0.25], "layers": "log", "domain": {"generate": {"disks": 3}}}"#).unwrap();
        assert_eq!(partial.fine_n, 32);
        assert_eq!(partial.layers, LayersConfig::Named("log".into()));
        assert!(matches!(partial.domain, DomainConfig::Generate { disks: 3, .. }));
    }
}
