//! Scripted scenarios that turn the theory into pass/fail numerical checks
//! and data files.

mod absorbing_ball;
mod backward_uniqueness;
mod energy_enstrophy;
mod exact_family;
mod steady_convergence;
mod sweep;
mod turbulence;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use absorbing_ball::{absorbing_ball_experiment, absorption_time};
pub use backward_uniqueness::{backward_uniqueness_probe, ProbeSettings};
pub use energy_enstrophy::{chi_rate, energy_enstrophy_trace, TraceSettings};
pub use exact_family::exact_family_verification;
pub use steady_convergence::{steady_convergence_experiment, SteadySettings};
pub use sweep::{sweep, write_sweep_csv, SweepConfig, SWEEP_HEADER};
pub use turbulence::{turbulence_diagnostics_run, TurbulenceSettings};

use crate::diagnostics::{effective_grashof, grashof, DiagRecord, DiagRecorder};
use crate::dynamics::{run, SimState, Sink, StepperConfig};
use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::io::csv::CsvSink;
use crate::spectral::PhysParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params_used: serde_json::Value,
    pub pass: bool,
    pub metrics: BTreeMap<String, f64>,
    pub series_paths: Vec<PathBuf>,
    pub seed: Option<u64>,
    /// Set when the experiment aborted; `pass` is then false.
    pub error: Option<String>,
}

impl ExperimentReport {
    pub fn new(name: &str, params_used: serde_json::Value) -> Self {
        Self {
            name: name.to_string(),
            params_used,
            pass: false,
            metrics: BTreeMap::new(),
            series_paths: Vec::new(),
            seed: None,
            error: None,
        }
    }

    pub fn failed(name: &str, params_used: serde_json::Value, err: &Error) -> Self {
        Self {
            error: Some(err.to_string()),
            ..Self::new(name, params_used)
        }
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    pub fn flag(&mut self, key: &str, value: bool) {
        self.set(key, if value { 1.0 } else { 0.0 });
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// The experiments reachable by name from the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AbsorbingBall,
    SteadyConvergence,
    EnergyEnstrophyTrace,
    ExactFamilyVerification,
    BackwardUniqueness,
    TurbulenceDiagnostics,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::AbsorbingBall,
        ExperimentKind::SteadyConvergence,
        ExperimentKind::EnergyEnstrophyTrace,
        ExperimentKind::ExactFamilyVerification,
        ExperimentKind::BackwardUniqueness,
        ExperimentKind::TurbulenceDiagnostics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AbsorbingBall => "absorbing_ball",
            ExperimentKind::SteadyConvergence => "steady_convergence",
            ExperimentKind::EnergyEnstrophyTrace => "energy_enstrophy_trace",
            ExperimentKind::ExactFamilyVerification => "exact_family_verification",
            ExperimentKind::BackwardUniqueness => "backward_uniqueness",
            ExperimentKind::TurbulenceDiagnostics => "turbulence_diagnostics",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidInput(format!("unknown experiment {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Runs `kind` as configured by `cfg`, writing series into `out_dir` if given.
pub fn run_experiment(kind: ExperimentKind, cfg: &RunConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    let (_, params, initial) = cfg.initial_state()?;
    let e = &cfg.experiment;
    let mut report = match kind {
        ExperimentKind::AbsorbingBall => absorbing_ball_experiment(&initial, &params, &cfg.stepper, out_dir)?,
        ExperimentKind::SteadyConvergence => {
            let settings = SteadySettings {
                epsilon: e.epsilon,
                residual_tol: e.residual_tol,
                initial_velocity: Some(initial.u.clone()),
            };
            steady_convergence_experiment(&initial.theta, &params, &cfg.stepper, &settings, out_dir)?
        }
        ExperimentKind::EnergyEnstrophyTrace => {
            let settings = TraceSettings {
                region_tol: e.region_tol,
                dead_band: e.dead_band,
            };
            energy_enstrophy_trace(&initial, &params, &cfg.stepper, &settings, out_dir)?
        }
        ExperimentKind::ExactFamilyVerification => {
            let spec = match &cfg.initial {
                crate::io::config::InitialConfig::ExactFamily(spec) => spec.clone(),
                _ => {
                    return Err(Error::Validation(
                        "exact_family_verification needs initial.kind = \"exact-family\"".into(),
                    ))
                }
            };
            let resolutions = if e.resolutions.is_empty() { vec![cfg.grid.n] } else { e.resolutions.clone() };
            let t_check = e.t_check.unwrap_or(cfg.stepper.t_end);
            exact_family_verification(&spec, &resolutions, &params, &cfg.stepper, t_check, out_dir)?
        }
        ExperimentKind::BackwardUniqueness => {
            let settings = ProbeSettings {
                perturbation_scale: e.perturbation_scale,
                seed: e.perturbation_seed,
                slack: e.slack,
            };
            backward_uniqueness_probe(&initial, &params, &cfg.stepper, &settings, out_dir)?
        }
        ExperimentKind::TurbulenceDiagnostics => {
            let settings = TurbulenceSettings {
                window: e.window,
                tail_fraction: e.tail_fraction,
            };
            turbulence_diagnostics_run(&initial, &params, &cfg.stepper, &settings, out_dir)?
        }
    };
    report.params_used = serde_json::to_value(cfg)?;
    if let crate::io::config::InitialConfig::Random(spec) = &cfg.initial {
        report.seed = Some(spec.seed);
    }
    Ok(report)
}

/// Adds `G`, `G_star_sigma` (with its window), final energy and enstrophy,
/// and final Λ membership from a diagnostic series.
pub(crate) fn add_summary(report: &mut ExperimentReport, records: &[DiagRecord], params: &PhysParams, tail_fraction: f64) {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return;
    };
    report.set("G", grashof(first.theta_l2, params));
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.g_sigma)).collect();
    if let Ok(e) = effective_grashof(&series, tail_fraction) {
        report.set("G_star_sigma", e.value);
        report.set("G_star_window_start", e.window_start);
        report.set("G_star_window_end", e.window_end);
    }
    report.set("final_energy", last.energy);
    report.set("final_enstrophy", last.enstrophy);
    report.flag("in_lambda_region", last.in_lambda_region);
    report.set("t_final", last.t);
}

/// Runs with a diagnostics recorder (streaming to `csv` when given) plus
/// `extra` sinks.
pub(crate) fn recorded_run(
    initial: &SimState,
    params: &PhysParams,
    cfg: &StepperConfig,
    csv: Option<&Path>,
    region_tol: f64,
    extra: &mut [&mut dyn Sink],
) -> Result<(SimState, Vec<DiagRecord>)> {
    let mut file_sink = csv.map(|p| CsvSink::create(p, region_tol)).transpose()?;
    let mut memory_sink = DiagRecorder::new(region_tol);
    let recorder: &mut dyn Sink = match file_sink.as_mut() {
        Some(f) => f,
        None => &mut memory_sink,
    };
    let mut sinks: Vec<&mut dyn Sink> = vec![recorder];
    sinks.extend(extra.iter_mut().map(|s| &mut **s as &mut dyn Sink));
    let final_state = run(initial, params, cfg, &mut sinks)?;
    drop(sinks);
    let records = match file_sink {
        Some(f) => f.recorder.records,
        None => memory_sink.records,
    };
    Ok((final_state, records))
}

/// Running trapezoid integral of `y(t)`; starts at 0.
pub(crate) fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    for i in 0..t.len() {
        if i > 0 {
            acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Writes a numeric CSV with the project's float formatting.
pub(crate) fn write_series(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn out_path(dir: Option<&Path>, name: &str) -> Result<Option<PathBuf>> {
    match dir {
        None => Ok(None),
        Some(d) => {
            std::fs::create_dir_all(d)?;
            Ok(Some(d.join(name)))
        }
    }
}
