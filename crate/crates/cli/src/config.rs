use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use desitter_core::geometry::ModelParams;
use desitter_core::quadrature::GridSpec;
use desitter_core::wightman::FieldTag;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    ModesValidate,
    KernelEval,
    Npoint,
    Smatrix,
    OutNpoint,
    GnsGram,
    DispersionScan,
    StationaryCheck,
    Contrast,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::ModesValidate => "modes-validate",
            Command::KernelEval => "kernel-eval",
            Command::Npoint => "npoint",
            Command::Smatrix => "smatrix",
            Command::OutNpoint => "out-npoint",
            Command::GnsGram => "gns-gram",
            Command::DispersionScan => "dispersion-scan",
            Command::StationaryCheck => "stationary-check",
            Command::Contrast => "contrast",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// vacuum, two one-particle in-states and their product
    In,
    /// j(f) and phi(h1) phi(h2)
    CurrentBlock,
    /// vacuum, phi(h1), j(f), phi(h1) phi(h2)
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Options {
    pub n: usize,
    /// Number of in-functions for smatrix.
    pub k: usize,
    pub s_max: usize,
    pub epsilon: f64,
    pub domain_eps: Option<f64>,
    pub basis: Basis,
    pub tags: Option<Vec<FieldTag>>,
    pub tau1: f64,
    pub tau2: f64,
    pub angle: f64,
    pub eta: f64,
    pub eps_sequence: Option<Vec<f64>>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            n: 3,
            k: 1,
            s_max: 30,
            epsilon: 0.1,
            domain_eps: None,
            basis: Basis::In,
            tags: None,
            tau1: 0.0,
            tau2: 0.3,
            angle: 1.0,
            eta: 0.1,
            eps_sequence: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    pub grid: GridSpec,
    /// name -> "builtin" or a path to a fixture JSON file.
    #[serde(default)]
    pub fixtures: BTreeMap<String, String>,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub options: Options,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Grid with the run seed applied.
    pub fn grid_spec(&self) -> GridSpec {
        GridSpec { seed: self.seed, ..self.grid.clone() }
    }
}
