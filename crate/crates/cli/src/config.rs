//! Experiment configuration: a flat JSON object with per-experiment fields.

use std::fmt;
use std::path::{Path, PathBuf};

use fracmorrey_core::data::{DataKind, DataRecipe};
use fracmorrey_core::solver::{
    EquationKind, ProblemSpec, SolverControls, SpectralFilter, TimeMesh,
};
use fracmorrey_core::{GridSpec, MorreyGridPolicy, SpaceParams, SumKind};
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LpCheck,
    Norms,
    Semigroup,
    KernelBounds,
    Split,
    Solve,
    SolveHj,
    ThresholdScan,
    BootstrapSchedule,
    EmbeddingCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::LpCheck,
        Experiment::Norms,
        Experiment::Semigroup,
        Experiment::KernelBounds,
        Experiment::Split,
        Experiment::Solve,
        Experiment::SolveHj,
        Experiment::ThresholdScan,
        Experiment::BootstrapSchedule,
        Experiment::EmbeddingCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::LpCheck => "lp-check",
            Experiment::Norms => "norms",
            Experiment::Semigroup => "semigroup",
            Experiment::KernelBounds => "kernel-bounds",
            Experiment::Split => "split",
            Experiment::Solve => "solve",
            Experiment::SolveHj => "solve-hj",
            Experiment::ThresholdScan => "threshold-scan",
            Experiment::BootstrapSchedule => "bootstrap-schedule",
            Experiment::EmbeddingCheck => "embedding-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKindName {
    PowerLaw,
    LogPower,
    Dirac,
    DiracDerivative,
    RandomShell,
    Constant,
}

/// `data` block: a recipe kind plus the parameters it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKindName,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `[theta, t]`: smooth a Dirac by `S(t)` of order `theta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolName {
    Homogeneous,
    Heat,
    GradHeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub alpha: f64,
    pub order: f64,
}

fn one() -> f64 {
    1.0
}

fn default_dim() -> usize {
    1
}

fn default_length() -> f64 {
    8.0
}

fn default_points() -> usize {
    256
}

fn default_theta() -> f64 {
    2.0
}

fn default_horizon() -> f64 {
    0.5
}

fn default_nodes() -> usize {
    64
}

fn default_grading() -> f64 {
    fracmorrey_core::solver::DEFAULT_GRADING
}

fn default_max_iters() -> usize {
    50
}

fn default_tol() -> f64 {
    1e-8
}

fn default_stride() -> usize {
    fracmorrey_core::norms::DEFAULT_CENTER_STRIDE
}

fn default_window() -> usize {
    fracmorrey_core::lp::DEFAULT_TAIL_WINDOW
}

fn default_samples() -> usize {
    50
}

/// Every experiment reads the fields it needs from this flat object;
/// missing required fields are reported with their path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(rename = "L", default = "default_length")]
    pub box_length: f64,
    #[serde(rename = "M", default = "default_points")]
    pub points: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default)]
    pub r: RName,
    /// Equation family for `bootstrap-schedule`; `solve` and `solve-hj`
    /// fix it themselves.
    #[serde(default)]
    pub equation: EquationName,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(rename = "K", default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "default_grading")]
    pub nu: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_stride")]
    pub center_stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FilterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    /// FBMF field used instead of `data` where an experiment takes one field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Repeat the experiment at twice the resolution where supported.
    #[serde(default)]
    pub refine: bool,
    /// Top-block window of the tail functional.
    #[serde(default = "default_window")]
    pub jwin: usize,
    // semigroup
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// File name of the semigroup CSV inside `out_dir`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_name: Option<String>,
    // kernel-bounds
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    // split
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_level: Option<usize>,
    // threshold-scan
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    // embedding-check
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationName {
    #[default]
    Power,
    HamiltonJacobi,
}

impl From<EquationName> for EquationKind {
    fn from(e: EquationName) -> Self {
        match e {
            EquationName::Power => EquationKind::Power,
            EquationName::HamiltonJacobi => EquationKind::HamiltonJacobi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RName {
    One,
    #[default]
    Infinity,
}

impl From<RName> for SumKind {
    fn from(r: RName) -> Self {
        match r {
            RName::One => SumKind::One,
            RName::Infinity => SumKind::Infinity,
        }
    }
}

fn missing(path: &str) -> RunError {
    RunError::config(path, "required for this experiment")
}

impl ExperimentConfig {
    /// A config with every optional field unset.
    pub fn new(experiment: Experiment) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": experiment }))
            .expect("defaults deserialize")
    }

    /// Parses JSON, reporting the path of the first offending field.
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            RunError::config(&path, &e.into_inner().to_string())
        })
    }

    /// Like [`Self::from_json`] on an already parsed value.
    pub fn from_value(value: serde_json::Value) -> Result<Self, RunError> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            RunError::config(&path, &e.into_inner().to_string())
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::config("config", &format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<GridSpec, RunError> {
        GridSpec::new(self.dim, self.box_length, self.points).map_err(|e| RunError::config("M", &e.to_string()))
    }

    pub fn gamma(&self) -> Result<f64, RunError> {
        self.gamma.ok_or_else(|| missing("gamma"))
    }

    pub fn space(&self) -> Result<SpaceParams, RunError> {
        let s = self.s.ok_or_else(|| missing("s"))?;
        let p = self.p.ok_or_else(|| missing("p"))?;
        let q = self.q.ok_or_else(|| missing("q"))?;
        SpaceParams::new(s, p, q, self.r.into()).map_err(|e| RunError::config("q", &e.to_string()))
    }

    pub fn policy(&self, grid: &GridSpec) -> Result<MorreyGridPolicy, RunError> {
        MorreyGridPolicy::dyadic(grid, self.center_stride)
            .map_err(|e| RunError::config("center_stride", &e.to_string()))
    }

    pub fn problem(&self, kind: EquationKind) -> Result<ProblemSpec, RunError> {
        let spec = ProblemSpec {
            theta: self.theta,
            gamma: self.gamma()?,
            kind,
            horizon: self.horizon,
            space: self.space()?,
        };
        spec.validate(self.dim)
            .map_err(|e| RunError::config("s", &e.to_string()))?;
        Ok(spec)
    }

    pub fn mesh(&self) -> Result<TimeMesh, RunError> {
        TimeMesh::graded(self.horizon, self.nodes, self.nu).map_err(|e| RunError::config("K", &e.to_string()))
    }

    pub fn controls(&self, grid: &GridSpec) -> Result<SolverControls, RunError> {
        if self.max_iters == 0 {
            return Err(RunError::config("max_iters", "must be >= 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(RunError::config("tol", "must be positive"));
        }
        let mut controls = SolverControls::new(self.max_iters, self.tol, self.policy(grid)?);
        controls.filter = self.filter.map(|f| SpectralFilter {
            alpha: f.alpha,
            order: f.order,
        });
        Ok(controls)
    }

    /// The configured recipe, or `fallback` when no `data` block is given.
    pub fn recipe(&self, fallback: Option<DataRecipe>) -> Result<DataRecipe, RunError> {
        let Some(d) = &self.data else {
            return fallback.ok_or_else(|| missing("data"));
        };
        let need = |v: Option<f64>, field: &str| v.ok_or_else(|| missing(&format!("data.{field}")));
        let kind = match d.kind {
            DataKindName::PowerLaw => DataKind::PowerLaw {
                beta: need(d.beta, "beta")?,
            },
            DataKindName::LogPower => DataKind::LogPower {
                theta: d.theta.unwrap_or(self.theta),
            },
            DataKindName::Dirac => DataKind::Dirac {
                smoothing: d.smoothing.map(|[theta, t]| (theta, t)),
            },
            DataKindName::DiracDerivative => DataKind::DiracDerivative {
                order: d.order.ok_or_else(|| missing("data.order"))?,
            },
            DataKindName::RandomShell => DataKind::RandomShell {
                s: need(d.s.or(self.s), "s")?,
                seed: d.seed.unwrap_or(self.seed),
            },
            DataKindName::Constant => DataKind::Constant,
        };
        let recipe = DataRecipe::new(kind, d.amplitude);
        recipe
            .validate()
            .map_err(|e| RunError::config("data", &e.to_string()))?;
        Ok(recipe)
    }
}
