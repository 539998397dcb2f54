//! JSON run configurations and their validation.
//!
//! The schema is documented in `config.schema.json` at the crate root.

use crate::discretization::DiscretizationParams;
use crate::error::{Result, RteError};
use crate::experiments::{Benchmark, StudyOptions, SweepOptions};
use crate::expr::Expr;
use crate::materials::{builtin_fields, MaterialField, Rect};
use crate::mesh::{build_hierarchy, default_levels};
use crate::solver::{SteppingMode, TimeSteppingConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(rename = "I")]
    pub cells: usize,
    #[serde(rename = "L", default)]
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "one")]
    pub n_polar: usize,
    pub n_azimuth: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default)]
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub name: String,
    /// Numbers for `constant`, expression strings for `expression`.
    #[serde(default)]
    pub params: Vec<serde_json::Value>,
    #[serde(default)]
    pub rects: Option<Vec<Rect>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressionConfig {
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig { delta: default_delta() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_mode")]
    pub mode: SteppingMode,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "yes")]
    pub reconstruct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Exact solution for a constant medium; needs a `constant` material.
    Manufactured,
    /// Zero source and initial state, isotropic inflow `t/(1+t)`.
    #[default]
    Benchmark,
    Custom {
        source: String,
        boundary: String,
        #[serde(default = "zero_expr")]
        initial: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// Times at which scalar-flux grids are written; empty means `T` only.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "yes")]
    pub scalar_flux: bool,
    #[serde(default = "yes")]
    pub manifest: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: default_dir(), snapshots: Vec::new(), scalar_flux: true, manifest: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub material: MaterialConfig,
    #[serde(default)]
    pub compression: CompressionConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_delta() -> f64 {
    1e-3
}
fn default_mode() -> SteppingMode {
    SteppingMode::CellAverage
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iters() -> usize {
    10_000
}
fn zero_expr() -> String {
    "0".into()
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| RteError::config("<file>", format!("{}: {e}", path.display())))
}

fn material_field(m: &MaterialConfig) -> Result<MaterialField> {
    let params: Vec<String> = m
        .params
        .iter()
        .map(|v| match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(n) => Ok(n.to_string()),
            _ => Err(RteError::config("material.params", "entries must be numbers or strings")),
        })
        .collect::<Result<_>>()?;
    if m.rects.is_some() && m.name != "lattice" {
        return Err(RteError::config("material.rects", "only valid for the lattice material"));
    }
    if let Some(rects) = &m.rects {
        for r in rects {
            if !(0.0 <= r.x0 && r.x0 < r.x1 && r.x1 <= 1.0 && 0.0 <= r.y0 && r.y0 < r.y1 && r.y1 <= 1.0) {
                return Err(RteError::config("material.rects", format!("rectangle {r:?} is not inside the unit square")));
            }
        }
    }
    builtin_fields(&m.name, &params, m.rects.clone())
}

/// A configuration checked against every downstream constraint.
pub struct ValidatedRun {
    pub config: RunConfig,
    pub params: DiscretizationParams,
    pub field: MaterialField,
    pub stepping: TimeSteppingConfig,
    /// Step indices at which snapshots are written.
    pub snapshot_steps: Vec<usize>,
}

impl RunConfig {
    pub fn validate(self) -> Result<ValidatedRun> {
        let n = self.mesh.cells;
        if n == 0 {
            return Err(RteError::config("mesh.I", "must be positive"));
        }
        let levels = self.mesh.levels.unwrap_or_else(|| default_levels(n));
        build_hierarchy(n, levels)
            .map_err(|_| RteError::config("mesh.L", format!("I={n} must equal 2^L times 1, 2 or 4 (L={levels})")))?;
        if self.quadrature.n_polar == 0 {
            return Err(RteError::config("quadrature.n_polar", "must be positive"));
        }
        if self.quadrature.n_azimuth == 0 {
            return Err(RteError::config("quadrature.n_azimuth", "must be positive"));
        }
        if !(self.kernel.g.abs() < 1.0) {
            return Err(RteError::config("kernel.g", "need |g| < 1"));
        }
        if !(self.compression.delta >= 0.0) {
            return Err(RteError::config("compression.delta", "must be nonnegative"));
        }
        let field = material_field(&self.material)?;
        field.validate()?;
        let t = &self.time;
        let stepping = TimeSteppingConfig {
            dt: t.dt,
            t_final: t.t_final,
            tol: t.tol,
            max_iters: t.max_iters,
            mode: t.mode,
            reconstruct: t.reconstruct,
        };
        let steps = stepping.steps()?;
        let mut snapshot_steps = Vec::new();
        for &s in &self.output.snapshots {
            let k = (s / t.dt).round();
            if !(s > 0.0 && s <= t.t_final * (1.0 + 1e-12)) || (k * t.dt - s).abs() > 1e-9 {
                return Err(RteError::config("output.snapshots", format!("{s} is not a positive multiple of dt up to T")));
            }
            snapshot_steps.push(k as usize);
        }
        if snapshot_steps.is_empty() {
            snapshot_steps.push(steps);
        }
        snapshot_steps.sort_unstable();
        snapshot_steps.dedup();
        match &self.problem {
            ProblemConfig::Manufactured => {
                if !matches!(field, MaterialField::Constant { .. }) {
                    return Err(RteError::config("problem.kind", "manufactured needs a constant material"));
                }
                if self.kernel.g != 0.0 {
                    return Err(RteError::config("problem.kind", "manufactured needs an isotropic kernel (g = 0)"));
                }
            }
            ProblemConfig::Custom { source, boundary, initial } => {
                Expr::parse(source).map_err(|e| RteError::config("problem.source", e.to_string()))?;
                Expr::parse(boundary).map_err(|e| RteError::config("problem.boundary", e.to_string()))?;
                Expr::parse_spatial(initial).map_err(|e| RteError::config("problem.initial", e.to_string()))?;
            }
            ProblemConfig::Benchmark => {}
        }
        let params = DiscretizationParams {
            n,
            levels,
            n_polar: self.quadrature.n_polar,
            n_azimuth: self.quadrature.n_azimuth,
            g: self.kernel.g,
            delta: self.compression.delta,
        };
        Ok(ValidatedRun { config: self, params, field, stepping, snapshot_steps })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    pub epsilon: Vec<f64>,
    /// Cells per axis; `h = 1/I` and `Δt = h`.
    #[serde(rename = "I")]
    pub cells: Vec<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "one_f")]
    pub sigma_t: f64,
    #[serde(default = "half")]
    pub sigma_a: f64,
    #[serde(rename = "T", default = "one_f")]
    pub t_final: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_mode")]
    pub mode: SteppingMode,
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
}

fn one_f() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}

impl ConvergenceConfig {
    pub fn options(&self) -> Result<StudyOptions> {
        if self.m.is_empty() || self.epsilon.is_empty() || self.cells.is_empty() {
            return Err(RteError::config("M/epsilon/I", "lists must be nonempty"));
        }
        if self.m.contains(&0) {
            return Err(RteError::config("M", "entries must be positive"));
        }
        if let Some(e) = self.epsilon.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(RteError::config("epsilon", format!("{e} is not in (0, 1]")));
        }
        for &n in &self.cells {
            if n == 0 || build_hierarchy(n, default_levels(n)).is_err() {
                return Err(RteError::config("I", format!("{n} is not 2^L times 1, 2 or 4")));
            }
            let steps = self.t_final * n as f64;
            if (steps - steps.round()).abs() > 1e-9 {
                return Err(RteError::config("T", format!("T·I must be an integer (I={n})")));
            }
        }
        if !(self.sigma_t > 0.0 && self.sigma_a >= 0.0) {
            return Err(RteError::config("sigma_t/sigma_a", "need sigma_t > 0 and sigma_a >= 0"));
        }
        if !(self.delta >= 0.0) {
            return Err(RteError::config("delta", "must be nonnegative"));
        }
        let opts = StudyOptions {
            sigma_t: self.sigma_t,
            sigma_a: self.sigma_a,
            delta: self.delta,
            t_final: self.t_final,
            tol: self.tol,
            max_iters: self.max_iters,
            mode: self.mode,
        };
        for &n in &self.cells {
            let mut c = TimeSteppingConfig::new(1.0 / n as f64, self.t_final, self.mode);
            c.tol = self.tol;
            c.max_iters = self.max_iters;
            c.validate()?;
        }
        Ok(opts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub benchmark: Benchmark,
    #[serde(rename = "I")]
    pub cells: usize,
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    pub delta: Vec<f64>,
    pub dt: f64,
    #[serde(rename = "T", default = "one_f")]
    pub t_final: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_mode")]
    pub mode: SteppingMode,
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
}

impl SweepConfig {
    pub fn options(&self, m: usize) -> Result<SweepOptions> {
        if self.cells == 0 || build_hierarchy(self.cells, default_levels(self.cells)).is_err() {
            return Err(RteError::config("I", format!("{} is not 2^L times 1, 2 or 4", self.cells)));
        }
        if m == 0 {
            return Err(RteError::config("M", "entries must be positive"));
        }
        if self.delta.is_empty() || self.delta.iter().any(|d| !(*d >= 0.0)) {
            return Err(RteError::config("delta", "need a nonempty list of nonnegative thresholds"));
        }
        let mut c = TimeSteppingConfig::new(self.dt, self.t_final, self.mode);
        c.tol = self.tol;
        c.max_iters = self.max_iters;
        c.steps()?;
        Ok(SweepOptions {
            n: self.cells,
            m,
            dt: self.dt,
            t_final: self.t_final,
            tol: self.tol,
            max_iters: self.max_iters,
            mode: self.mode,
        })
    }
}
