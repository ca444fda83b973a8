//! Experiment configuration: a JSON document, strictly typed.

use checkerboard::rigidity::Perturbation;
use checkerboard::solver::BoundaryKind;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Deform,
    RigidityScaling,
    CellFormula,
    Homogenize,
    Poincare,
    Microcrack,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Deform => "deform",
            Experiment::RigidityScaling => "rigidity_scaling",
            Experiment::CellFormula => "cell_formula",
            Experiment::Homogenize => "homogenize",
            Experiment::Poincare => "poincare",
            Experiment::Microcrack => "microcrack",
        }
    }

    pub fn has_figure(self) -> bool {
        matches!(self, Experiment::Deform | Experiment::Homogenize | Experiment::Microcrack)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    /// `[x0, y0, x1, y1]`; the unit square when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 4]>,
    /// Subregion used by the Poincaré quotient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<[f64; 4]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftKind {
    Default,
    StressFree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StiffKind {
    Elastic,
    Rigid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "four")]
    pub beta: f64,
    #[serde(default = "soft_default")]
    pub soft: SoftKind,
    #[serde(default = "stiff_default")]
    pub stiff: StiffKind,
}

fn two() -> f64 {
    2.0
}
fn four() -> f64 {
    4.0
}
fn soft_default() -> SoftKind {
    SoftKind::Default
}
fn stiff_default() -> StiffKind {
    StiffKind::Elastic
}

impl Default for Material {
    fn default() -> Self {
        Material { p: 2.0, beta: 4.0, soft: SoftKind::Default, stiff: StiffKind::Elastic }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solver {
    /// Elements per tile edge.
    #[serde(default = "resolution_default")]
    pub resolution: usize,
    #[serde(default = "tol_default")]
    pub tol: f64,
    #[serde(default = "iterations_default")]
    pub max_iterations: usize,
    #[serde(default = "boundary_default")]
    pub boundary: BoundaryKind,
}

fn resolution_default() -> usize {
    4
}
fn tol_default() -> f64 {
    1e-8
}
fn iterations_default() -> usize {
    5000
}
fn boundary_default() -> BoundaryKind {
    BoundaryKind::Periodic
}

impl Default for Solver {
    fn default() -> Self {
        Solver { resolution: 4, tol: 1e-8, max_iterations: 5000, boundary: BoundaryKind::Periodic }
    }
}

/// Macroscopic data: a gradient, a rotation pair in degrees, or both.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Deformation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<[[f64; 2]; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_deg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rigidity {
    pub family: Family,
    pub levels: Vec<f64>,
}

/// Perturbation families; the noise seed comes from the top-level `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Zero,
    Smooth,
    NodalNoise,
    HingeOpening,
}

impl Family {
    pub fn with_seed(self, seed: u64) -> Perturbation {
        match self {
            Family::Zero => Perturbation::Zero,
            Family::Smooth => Perturbation::Smooth,
            Family::NodalNoise => Perturbation::NodalNoise { seed },
            Family::HingeOpening => Perturbation::HingeOpening,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
    /// File stem of the artifacts; the experiment name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub geometry: Geometry,
    #[serde(default)]
    pub material: Material,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub deformation: Deformation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigidity: Option<Rigidity>,
    pub output: Output,
}

impl ExperimentConfig {
    pub fn from_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_str(&text, path)
    }

    pub fn stem(&self) -> String {
        self.output.stem.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.geometry;
        if !(g.lambda > 0.0 && g.lambda < 1.0) {
            return Err(invalid("geometry.lambda", format!("{} is not in (0, 1)", g.lambda)));
        }
        if let Some(e) = g.epsilon {
            positive("geometry.epsilon", e)?;
        }
        if let Some(list) = &g.epsilons {
            if list.is_empty() {
                return Err(invalid("geometry.epsilons", "empty list"));
            }
            for &e in list {
                positive("geometry.epsilons", e)?;
            }
            if list.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(invalid("geometry.epsilons", "must be strictly decreasing"));
            }
        }
        for (name, r) in [("geometry.domain", g.domain), ("geometry.inner", g.inner)] {
            if let Some([x0, y0, x1, y1]) = r {
                if ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) || !(x1 > x0 && y1 > y0) {
                    return Err(invalid(name, "expected [x0, y0, x1, y1] with x0 < x1 and y0 < y1"));
                }
            }
        }
        let m = &self.material;
        if !(m.p >= 1.0 && m.p.is_finite()) {
            return Err(invalid("material.p", format!("{} is not a finite number >= 1", m.p)));
        }
        positive("material.beta", m.beta)?;
        let s = &self.solver;
        if s.resolution < 2 {
            return Err(invalid("solver.resolution", "must be at least 2"));
        }
        positive("solver.tol", s.tol)?;
        if s.max_iterations == 0 {
            return Err(invalid("solver.max_iterations", "must be positive"));
        }
        let d = &self.deformation;
        if let Some(f) = d.gradient {
            if !f.iter().flatten().all(|v| v.is_finite()) {
                return Err(invalid("deformation.gradient", "entries must be finite"));
            }
        }
        for (name, v) in [("deformation.s_deg", d.s_deg), ("deformation.r_deg", d.r_deg)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(invalid(name, "must be finite"));
                }
            }
        }
        let need = |ok: bool, field: &str, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(invalid(field, format!("required by experiment `{}`: {what}", self.experiment.name())))
            }
        };
        let pair = d.s_deg.is_some() && d.r_deg.is_some();
        match self.experiment {
            Experiment::Deform => {
                need(pair || d.gradient.is_some(), "deformation", "s_deg and r_deg, or gradient")?;
                need(g.epsilon.is_some(), "geometry.epsilon", "the lattice period")?;
            }
            Experiment::Microcrack => {
                need(d.gradient.is_some(), "deformation.gradient", "the macroscopic gradient")?;
                need(g.epsilon.is_some(), "geometry.epsilon", "the lattice period")?;
            }
            Experiment::CellFormula => {
                need(d.gradient.is_some(), "deformation.gradient", "the macroscopic gradient")?;
            }
            Experiment::Homogenize => {
                need(d.gradient.is_some(), "deformation.gradient", "the macroscopic gradient")?;
                need(g.epsilons.is_some(), "geometry.epsilons", "the list of periods")?;
            }
            Experiment::Poincare => {
                need(g.epsilons.is_some(), "geometry.epsilons", "the list of periods")?;
            }
            Experiment::RigidityScaling => {
                need(pair, "deformation", "s_deg and r_deg")?;
                let Some(r) = &self.rigidity else {
                    return Err(invalid("rigidity", "required by experiment `rigidity_scaling`"));
                };
                if r.levels.len() < 3 || r.levels.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                    return Err(invalid("rigidity.levels", "need at least 3 positive levels"));
                }
            }
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("{v} is not a finite positive number")))
    }
}
