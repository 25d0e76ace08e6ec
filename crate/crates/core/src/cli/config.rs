use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bands::BandStructure;
use crate::bosehubbard::GmonModel;
use crate::error::{Error, Result};
use crate::numkernel::ComplexMatrix;
use crate::polyapprox::FilterSpec;

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasesConfig {
    pub filter: FilterSpec,
    #[serde(default = "default_synthesis_tol")]
    pub synthesis_tol: f64,
}

fn default_synthesis_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    /// Random eigenbasis with the given eigenvalues, drawn from `--seed`.
    Synthetic { values: Vec<f64> },
    /// Hermitian matrix with spectrum in `[0, 1]`.
    Matrix(ComplexMatrix),
    /// Gmon Hamiltonian rescaled into `(0, 1)`.
    Gmon {
        model: GmonModel,
        #[serde(default = "default_margin")]
        margin: f64,
    },
}

pub(crate) fn default_margin() -> f64 {
    0.05
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BandSource {
    MinGap(f64),
    Count(usize),
    Explicit(BandStructure),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSource {
    /// Equal superposition of all eigenvectors.
    #[default]
    UniformEigen,
    /// Haar-random state from `--seed`.
    Haar,
    Basis(usize),
    /// Amplitudes as `[re, im]` pairs; normalized on load.
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectMode {
    #[default]
    Enumerate,
    Sample,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub model: ModelSource,
    pub bands: BandSource,
    /// Filter accuracy per round.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Global channel budget, split over rounds as `ε̂/(c·L·log₂L)`.
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default = "default_budget_constant")]
    pub budget_constant: f64,
    #[serde(default)]
    pub mode: ProjectMode,
    #[serde(default)]
    pub input: InputSource,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Haar states added to the eigenvector probes of the distance proxy.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_budget_constant() -> f64 {
    4.0
}

fn default_trials() -> usize {
    1000
}

fn default_samples() -> usize {
    16
}

impl ProjectConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.epsilon, self.budget) {
            (Some(e), None) | (None, Some(e)) if e > 0.0 && e < 1.0 => {}
            (Some(_), Some(_)) => return Err(Error::Config("give either epsilon or budget, not both".into())),
            (None, None) => return Err(Error::Config("epsilon or budget is required".into())),
            _ => return Err(Error::Config("epsilon and budget must lie in (0, 1)".into())),
        }
        if !(self.budget_constant > 0.0) {
            return Err(Error::Config("budget_constant must be positive".into()));
        }
        if self.mode == ProjectMode::Sample && self.trials == 0 {
            return Err(Error::Config("sample mode needs at least one trial".into()));
        }
        if let ModelSource::Gmon { model, margin } = &self.model {
            model.validate()?;
            if !(*margin > 0.0 && *margin < 0.5) {
                return Err(Error::Config(format!("margin must lie in (0, 1/2), got {margin}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselinesConfig {
    /// Band counts, one CSV row each.
    pub ls: Vec<usize>,
    /// Spectral gap `Δ` shared by every threshold and the adiabatic estimate.
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default = "default_walk_trials")]
    pub walk_trials: usize,
}

fn default_walk_trials() -> usize {
    10_000
}

impl BaselinesConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ls.is_empty() || self.ls.iter().any(|&l| l < 2) {
            return Err(Error::Config("ls must list band counts of at least 2".into()));
        }
        FilterSpec::new(0.5, self.delta, self.epsilon).map_err(|e| Error::Config(e.to_string()))?;
        for &l in &self.ls {
            if self.delta * l as f64 > 1.0 + 1e-12 {
                return Err(Error::Config(format!("{l} bands with gap {} do not fit in [0, 1]", self.delta)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoseHubbardConfig {
    pub model: GmonModel,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Band-detection threshold in units of `η`.
    #[serde(default = "default_min_gap_eta")]
    pub min_gap_eta: f64,
    /// Inject seeded control errors.
    #[serde(default)]
    pub noise: bool,
}

fn default_min_gap_eta() -> f64 {
    0.3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_instances")]
    pub instances: usize,
}

fn default_instances() -> usize {
    20
}
