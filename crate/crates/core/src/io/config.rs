//! JSON run configuration. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "grid": {"n": 64, "box_len": 6.283185307179586},
//!   "physics": {"nu": 0.1, "g": 1.0},
//!   "initial": {"kind": "random", "seed": 1, "k_peak": 3.0, "u_l2": 1.0, "theta_l2": 1.0},
//!   "stepper": {"dt": 0.001, "t_end": 1.0, "sample_every": 10},
//!   "outputs": {"dir": "out", "snapshot_every": 0, "diagnostics": ["csv"]}
//! }
//! ```
//!
//! `initial.kind` is one of `random`, `exact-family` (fields of
//! [`FamilySpec`]) or `snapshot` (`path`). `box_len` may also be written `L`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{SimState, StepperConfig};
use crate::error::{Error, Result};
use crate::exact::FamilySpec;
use crate::io::snapshot::read_snapshot;
use crate::random::{random_state, RandomSpec};
use crate::spectral::{Grid, PhysParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "two_pi", alias = "L")]
    pub box_len: f64,
}

fn two_pi() -> f64 {
    std::f64::consts::TAU
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub nu: f64,
    pub g: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotInit {
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialConfig {
    Random(RandomSpec),
    ExactFamily(FamilySpec),
    Snapshot(SnapshotInit),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticOutput {
    /// Per-sample diagnostics CSV.
    Csv,
    /// Dyadic energy spectrum of the final state, as JSON.
    Spectrum,
    /// Distribution function of the final θ, as CSV.
    Distribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Write a snapshot every this many samples; 0 writes only the final state.
    pub snapshot_every: usize,
    pub diagnostics: Vec<DiagnosticOutput>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            snapshot_every: 0,
            diagnostics: vec![DiagnosticOutput::Csv],
        }
    }
}

/// Knobs read by the scripted experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Largest Grashof number accepted by the small-Grashof experiment.
    pub epsilon: f64,
    pub perturbation_scale: f64,
    pub perturbation_seed: u64,
    pub tail_fraction: f64,
    /// Averaging window `[t1, t2]`; defaults to the second half of the run.
    pub window: Option<[f64; 2]>,
    pub residual_tol: f64,
    pub region_tol: f64,
    pub dead_band: f64,
    /// Resolutions for exact-family verification; empty means `grid.n`.
    pub resolutions: Vec<usize>,
    /// Comparison time for exact-family verification; defaults to `t_end`.
    pub t_check: Option<f64>,
    /// Quadrature slack of the separation bounds.
    pub slack: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            perturbation_scale: 1e-6,
            perturbation_seed: 0,
            tail_fraction: 0.25,
            window: None,
            residual_tol: 1e-9,
            region_tol: 1e-6,
            dead_band: 1e-8,
            resolutions: Vec::new(),
            t_check: None,
            slack: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub experiment: ExperimentConfig,
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(parse_error)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a configuration file. Relative snapshot
/// paths stay relative to the working directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    parse_config(&std::fs::read_to_string(path)?)
}

fn invalid(context: &str, e: Error) -> Error {
    let msg = match e {
        Error::InvalidGrid(m) | Error::InvalidParams(m) | Error::InvalidStepper(m) | Error::InvalidInput(m) => m,
        other => other.to_string(),
    };
    Error::Validation(format!("{context}: {msg}"))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid.n, self.grid.box_len).map_err(|e| invalid("grid", e))?;
        self.params().map_err(|e| invalid("physics", e))?;
        self.stepper.validate().map_err(|e| invalid("stepper", e))?;
        match &self.initial {
            InitialConfig::Random(spec) => spec.validate().map_err(|e| invalid("initial", e))?,
            InitialConfig::ExactFamily(_) => {}
            InitialConfig::Snapshot(s) => {
                if !s.path.exists() {
                    return Err(Error::Validation(format!(
                        "initial.path: {} does not exist",
                        s.path.display()
                    )));
                }
            }
        }
        let e = &self.experiment;
        if !(e.tail_fraction > 0.0 && e.tail_fraction <= 1.0) {
            return Err(Error::Validation("experiment.tail_fraction must lie in (0, 1]".into()));
        }
        if !(e.perturbation_scale >= 0.0) {
            return Err(Error::Validation("experiment.perturbation_scale must be ≥ 0".into()));
        }
        for &n in &e.resolutions {
            Grid::new(n, self.grid.box_len).map_err(|err| invalid("experiment.resolutions", err))?;
        }
        if let Some([a, b]) = e.window {
            if !(a < b) {
                return Err(Error::Validation("experiment.window must satisfy t1 < t2".into()));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysParams> {
        PhysParams::new(self.physics.nu, self.physics.g, self.grid.box_len)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.grid.n, self.grid.box_len)
    }

    /// Builds the initial state on `n × n` (usually `grid.n`).
    pub fn initial_state_at(&self, n: usize) -> Result<(Arc<Grid>, PhysParams, SimState)> {
        let grid = Grid::new(n, self.grid.box_len)?;
        let params = self.params()?;
        let state = match &self.initial {
            InitialConfig::Random(spec) => random_state(&grid, spec)?,
            InitialConfig::ExactFamily(spec) => spec.state_at(&grid, &params, 0.0)?,
            InitialConfig::Snapshot(s) => {
                let (state, _) = read_snapshot(&s.path)?;
                if state.grid().n() != n || (state.grid().box_len() - self.grid.box_len).abs() > 1e-12 {
                    return Err(Error::Validation(format!(
                        "snapshot grid {}×{} on L = {} does not match the configured grid",
                        state.grid().n(),
                        state.grid().n(),
                        state.grid().box_len()
                    )));
                }
                state
            }
        };
        Ok((grid, params, state))
    }

    pub fn initial_state(&self) -> Result<(Arc<Grid>, PhysParams, SimState)> {
        self.initial_state_at(self.grid.n)
    }

    /// Pretty JSON with every default filled in.
    pub fn canonical(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
