//! Scenario configuration: a single TOML document describing grid, material,
//! initial data, forcing, solver settings and the output plan.

use crate::grid::{Grid, GridError, GridSpec, VectorField};
use crate::integrator::{FieldState, ForcingSpec, Physics, SolverConfig};
use crate::material::{regularize_kappa, HeatCapacityModel, KappaLaw, MaterialError, DEFAULT_M};
use crate::tensor::{ElasticityTensors, SymMatrix2, TensorError, TensorSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialization error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("unknown built-in scenario '{0}'")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorsConfig {
    pub viscosity: TensorSpec,
    pub elasticity: TensorSpec,
    pub coupling: SymMatrix2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub kappa: KappaLaw,
    pub diffusivity: f64,
    /// Floor ε of the regularized heat capacity κ_ε = max(κ, ε); none keeps κ.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Shift M of the logarithmic entropy.
    #[serde(default = "default_m")]
    pub m_shift: f64,
}

fn default_m() -> f64 {
    DEFAULT_M
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TemperatureInit {
    Uniform { value: f64 },
    /// `base + amplitude·exp(−|x−c|²/(2 width²))`.
    Gaussian { base: f64, amplitude: f64, width: f64, center: [f64; 2] },
    /// `base·x/Lx`, vanishing along the edge x = 0.
    Ramp { base: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorInit {
    #[default]
    Zero,
    /// `amplitude·sin(kπx/Lx) sin(lπy/Ly)·direction` with `modes = [k, l]`.
    SineMode { amplitude: f64, direction: [f64; 2], #[serde(default = "unit_modes")] modes: [u32; 2] },
}

fn unit_modes() -> [u32; 2] {
    [1, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub temperature: TemperatureInit,
    #[serde(default)]
    pub velocity: VectorInit,
    #[serde(default)]
    pub displacement: VectorInit,
}

/// Slack of the per-step inequality checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Energy residual may exceed zero by at most this fraction of F(0).
    pub energy: f64,
    /// Entropy residual may fall below zero by this times `1 + |S|`.
    pub entropy: f64,
    /// Logarithmic-entropy inequality slack relative to `1 + |Ŝ|`.
    pub corner: f64,
    /// Relative slack of the pointwise bound chain.
    pub chain: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { energy: 1e-9, entropy: 1e-8, corner: 1e-8, chain: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPlan {
    /// Output directory (overridable from the command line or `TVSIM_OUTPUT_DIR`).
    pub dir: PathBuf,
    /// Write a diagnostics row every this many accepted steps.
    pub record_every: usize,
    /// Times at which a snapshot is written; steps land exactly on them.
    pub snapshot_times: Vec<f64>,
    /// Times at which a restartable checkpoint is written.
    pub checkpoint_times: Vec<f64>,
}

impl Default for OutputPlan {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), record_every: 1, snapshot_times: Vec::new(), checkpoint_times: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub final_time: f64,
    pub grid: GridSpec,
    pub tensors: TensorsConfig,
    pub material: MaterialConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputPlan,
}

/// Everything needed to step a scenario.
pub struct Resolved {
    pub grid: Grid,
    pub physics: Physics,
    pub initial: FieldState,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Reads a TOML file, or a built-in scenario given as `builtin:<name>`.
    pub fn load(spec: &str) -> Result<Self, ConfigError> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            return builtin(name).ok_or_else(|| ConfigError::UnknownBuiltin(name.to_string()));
        }
        let path = PathBuf::from(spec);
        let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Read { path, source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |s: String| Err(ConfigError::Invalid(s));
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return invalid(format!("final_time must be positive (got {})", self.final_time));
        }
        self.solver.validate().map_err(ConfigError::Invalid)?;
        self.forcing.validate().map_err(ConfigError::Invalid)?;
        self.material.kappa.validate()?;
        if !(self.material.diffusivity > 0.0) {
            return invalid(format!("diffusivity must be positive (got {})", self.material.diffusivity));
        }
        if self.output.record_every == 0 {
            return invalid("record_every must be at least 1".into());
        }
        for &t in self.output.snapshot_times.iter().chain(&self.output.checkpoint_times) {
            if !(t > 0.0 && t <= self.final_time) {
                return invalid(format!("output time {t} outside (0, final_time]"));
            }
        }
        if let TemperatureInit::Gaussian { width, .. } = self.initial.temperature {
            if !(width > 0.0) {
                return invalid("Gaussian width must be positive".into());
            }
        }
        Ok(())
    }

    pub fn heat_capacity(&self) -> Result<HeatCapacityModel, ConfigError> {
        let base = HeatCapacityModel::new(self.material.kappa.clone())?;
        Ok(match self.material.eps {
            Some(eps) => regularize_kappa(&base, eps)?,
            None => base,
        })
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        self.validate()?;
        let grid = self.grid.build()?;
        let tensors = ElasticityTensors::new(
            self.tensors.viscosity.build()?,
            self.tensors.elasticity.build()?,
            self.tensors.coupling,
        )?;
        let physics = Physics { tensors, model: self.heat_capacity()?, diffusivity: self.material.diffusivity };
        let initial = FieldState {
            u: vector_field(&grid, &self.initial.displacement),
            v: vector_field(&grid, &self.initial.velocity),
            theta: temperature_field(&grid, &self.initial.temperature),
            t: 0.0,
        };
        Ok(Resolved { grid, physics, initial })
    }

    /// Times at which steps must land exactly.
    pub fn stop_times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.output.snapshot_times.iter().chain(&self.output.checkpoint_times).copied().collect();
        t.push(self.final_time);
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

pub fn temperature_field(grid: &Grid, init: &TemperatureInit) -> Vec<f64> {
    match *init {
        TemperatureInit::Uniform { value } => vec![value; grid.len()],
        TemperatureInit::Gaussian { base, amplitude, width, center } => grid.sample(|x, y| {
            let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
            base + amplitude * (-r2 / (2.0 * width * width)).exp()
        }),
        TemperatureInit::Ramp { base } => grid.sample(|x, _| base * x / grid.lx),
    }
}

pub fn vector_field(grid: &Grid, init: &VectorInit) -> VectorField {
    match *init {
        VectorInit::Zero => VectorField::zeros(grid.len()),
        VectorInit::SineMode { amplitude, direction, modes } => grid.sample_vector_dirichlet(|x, y| {
            let s = amplitude
                * (modes[0] as f64 * PI * x / grid.lx).sin()
                * (modes[1] as f64 * PI * y / grid.ly).sin();
            (s * direction[0], s * direction[1])
        }),
    }
}

pub const BUILTIN_NAMES: [&str; 6] =
    ["default-relaxation", "pure-heat", "debye", "trivial", "temperature-with-zeros", "pulse"];

fn isotropic(lambda: f64, mu: f64) -> TensorSpec {
    TensorSpec::Isotropic { lambda, mu }
}

/// Built-in scenarios by name.
pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    let base = ScenarioConfig {
        name: "default-relaxation".into(),
        final_time: 50.0,
        grid: GridSpec { nx: 32, ny: 32, lx: 1.0, ly: 1.0 },
        tensors: TensorsConfig {
            viscosity: isotropic(1.0, 1.0),
            elasticity: isotropic(1.0, 1.0),
            coupling: 0.5 * SymMatrix2::IDENTITY,
        },
        material: MaterialConfig { kappa: KappaLaw::Constant { k0: 1.0 }, diffusivity: 1.0, eps: None, m_shift: DEFAULT_M },
        initial: InitialConfig {
            temperature: TemperatureInit::Gaussian { base: 1.0, amplitude: 1.0, width: 0.1, center: [0.5, 0.5] },
            velocity: VectorInit::SineMode { amplitude: 0.5, direction: [1.0, 0.0], modes: [1, 1] },
            displacement: VectorInit::Zero,
        },
        forcing: ForcingSpec::Zero,
        solver: SolverConfig::default(),
        tolerances: Tolerances::default(),
        output: OutputPlan::default(),
    };
    let cfg = match name {
        "default-relaxation" => base,
        "pure-heat" => ScenarioConfig {
            name: name.into(),
            initial: InitialConfig { velocity: VectorInit::Zero, ..base.initial.clone() },
            ..base
        },
        "debye" => ScenarioConfig {
            name: name.into(),
            final_time: 5.0,
            grid: GridSpec { nx: 24, ny: 24, lx: 1.0, ly: 1.0 },
            material: MaterialConfig {
                kappa: KappaLaw::DebyeLike { k0: 1.0, xi_d: 1.0 },
                eps: Some(1e-3),
                ..base.material.clone()
            },
            initial: InitialConfig {
                temperature: TemperatureInit::Gaussian { base: 0.2, amplitude: 0.3, width: 0.1, center: [0.5, 0.5] },
                ..base.initial.clone()
            },
            ..base
        },
        "trivial" => ScenarioConfig {
            name: name.into(),
            final_time: 1.0,
            grid: GridSpec { nx: 8, ny: 8, lx: 1.0, ly: 1.0 },
            initial: InitialConfig {
                temperature: TemperatureInit::Uniform { value: 1.0 },
                velocity: VectorInit::Zero,
                displacement: VectorInit::Zero,
            },
            ..base
        },
        "temperature-with-zeros" => ScenarioConfig {
            name: name.into(),
            final_time: 1.0,
            grid: GridSpec { nx: 16, ny: 16, lx: 1.0, ly: 1.0 },
            initial: InitialConfig { temperature: TemperatureInit::Ramp { base: 2.0 }, ..base.initial.clone() },
            ..base
        },
        "pulse" => ScenarioConfig {
            name: name.into(),
            final_time: 10.0,
            grid: GridSpec { nx: 24, ny: 24, lx: 1.0, ly: 1.0 },
            initial: InitialConfig {
                temperature: TemperatureInit::Uniform { value: 1.0 },
                velocity: VectorInit::Zero,
                displacement: VectorInit::Zero,
            },
            forcing: ForcingSpec::Pulse { force: [2.0, 1.0], heat: 1.0, duration: 1.0, center: [0.4, 0.6], width: 0.15 },
            ..base
        },
        _ => return None,
    };
    Some(cfg)
}
