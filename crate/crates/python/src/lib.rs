//! Python bindings: runs, exact-family checks and scripted experiments
//! driven by the same JSON configurations as the `boussinesq` binary.
//! Results come back as plain dicts and lists.

use std::path::PathBuf;

use boussinesq_core::cli::simulate as simulate_run;
use boussinesq_core::diagnostics::grashof as grashof_number;
use boussinesq_core::dynamics::StepperConfig;
use boussinesq_core::exact::{Family, FamilySpec};
use boussinesq_core::experiments::{exact_family_verification, run_experiment as run_kind, ExperimentKind};
use boussinesq_core::io::config::parse_config;
use boussinesq_core::{Error, PhysParams};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Parse { .. }
        | Error::Validation(_)
        | Error::MissingPath(_)
        | Error::InvalidInput(_)
        | Error::InvalidGrid(_)
        | Error::InvalidParams(_)
        | Error::InvalidStepper(_)
        | Error::InvalidWaveVector { .. }
        | Error::Unresolvable { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn from_json(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Diagnostics of every sample of a run, as a JSON array.
pub fn simulate_json(config: &str, out_dir: Option<PathBuf>) -> Result<String, Error> {
    let cfg = parse_config(config)?;
    let output = simulate_run(&cfg, out_dir.as_deref())?;
    Ok(serde_json::to_string(&output.records)?)
}

/// Report of one scripted experiment, as a JSON object.
pub fn experiment_json(name: &str, config: &str, out_dir: Option<PathBuf>) -> Result<String, Error> {
    let kind: ExperimentKind = name.parse()?;
    let cfg = parse_config(config)?;
    run_kind(kind, &cfg, out_dir.as_deref()).map(|r| r.to_json())
}

/// Exact-family verification report at a single resolution, as JSON.
pub fn verify_exact_json(family: &str, n: usize, t_check: f64, dt: f64, nu: f64, g: f64) -> Result<String, Error> {
    let family: Family = family.parse()?;
    let params = PhysParams::new(nu, g, std::f64::consts::TAU)?;
    let cfg = StepperConfig { dt, t_end: t_check, ..StepperConfig::default() };
    exact_family_verification(&FamilySpec::new(family), &[n], &params, &cfg, t_check, None).map(|r| r.to_json())
}

/// Runs a JSON configuration; returns one dict per sample. Files are
/// written when `out_dir` (or `outputs.dir`) is set.
#[pyfunction]
#[pyo3(signature = (config, out_dir=None))]
fn simulate(py: Python<'_>, config: &str, out_dir: Option<PathBuf>) -> PyResult<Py<PyAny>> {
    let text = py.detach(|| simulate_json(config, out_dir)).map_err(to_py_err)?;
    from_json(py, &text)
}

/// Runs the named experiment on a JSON configuration and returns its report.
#[pyfunction]
#[pyo3(signature = (name, config, out_dir=None))]
fn run_experiment(py: Python<'_>, name: &str, config: &str, out_dir: Option<PathBuf>) -> PyResult<Py<PyAny>> {
    let text = py.detach(|| experiment_json(name, config, out_dir)).map_err(to_py_err)?;
    from_json(py, &text)
}

#[pyfunction]
#[pyo3(signature = (family, n, t_check=1.0, dt=1e-3, nu=0.1, g=1.0))]
fn verify_exact(py: Python<'_>, family: &str, n: usize, t_check: f64, dt: f64, nu: f64, g: f64) -> PyResult<Py<PyAny>> {
    let text = py.detach(|| verify_exact_json(family, n, t_check, dt, nu, g)).map_err(to_py_err)?;
    from_json(py, &text)
}

/// `G = g‖θ₀‖/(ν²κ₀²)`.
#[pyfunction]
#[pyo3(signature = (theta0_l2, nu, g, box_len=std::f64::consts::TAU))]
fn grashof(theta0_l2: f64, nu: f64, g: f64, box_len: f64) -> PyResult<f64> {
    let params = PhysParams::new(nu, g, box_len).map_err(to_py_err)?;
    Ok(grashof_number(theta0_l2, &params))
}

#[pyfunction]
fn experiment_names() -> Vec<&'static str> {
    ExperimentKind::ALL.iter().map(|k| k.name()).collect()
}

#[pymodule]
fn boussinesq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(verify_exact, m)?)?;
    m.add_function(wrap_pyfunction!(grashof, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_names, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "grid": {"n": 16},
        "physics": {"nu": 0.5, "g": 1.0},
        "initial": {"kind": "random", "seed": 1, "u_l2": 0.5, "theta_l2": 0.5},
        "stepper": {"dt": 0.005, "t_end": 0.05, "sample_every": 5}
    }"#;

    #[test]
    fn simulate_returns_every_sample() {
        let v: serde_json::Value = serde_json::from_str(&simulate_json(CONFIG, None).unwrap()).unwrap();
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0]["energy"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn experiment_report_round_trips() {
        let text = experiment_json("turbulence_diagnostics", CONFIG, None).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["name"], "turbulence_diagnostics");
        assert!(matches!(experiment_json("nope", CONFIG, None), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn exact_check_and_errors() {
        let text = verify_exact_json("horizontal", 16, 0.1, 1e-3, 0.1, 1.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["pass"], true);
        assert!(verify_exact_json("vertical", 7, 0.1, 1e-3, 0.1, 1.0).is_err());
        assert!(verify_exact_json("spiral", 16, 0.1, 1e-3, 0.1, 1.0).is_err());
    }

    #[test]
    fn names_cover_all_kinds() {
        assert_eq!(experiment_names().len(), ExperimentKind::ALL.len());
    }
}
