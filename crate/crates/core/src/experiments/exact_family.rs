use std::path::Path;

use serde_json::json;

use super::{out_path, write_series, ExperimentReport};
use crate::dynamics::{run, StepperConfig};
use crate::error::{Error, Result};
use crate::exact::FamilySpec;
use crate::spectral::{Grid, PhysParams};

/// Required error at the finest resolution.
const FINEST_TOL: f64 = 1e-7;
/// Below this, errors are at the time-stepping floor and need not decrease.
const ERROR_FLOOR: f64 = 1e-9;
/// Errors below this are roundoff and carry no convergence order.
const ORDER_FLOOR: f64 = 1e-12;

fn error_at(spec: &FamilySpec, n: usize, params: &PhysParams, cfg: &StepperConfig, t_check: f64) -> Result<f64> {
    let grid = Grid::new(n, params.box_len)?;
    let initial = spec.state_at(&grid, params, 0.0)?;
    let cfg = StepperConfig {
        t_end: t_check,
        ..cfg.clone()
    };
    let last = run(&initial, params, &cfg, &mut [])?;
    let exact = spec.state_at(&grid, params, t_check)?;
    Ok(last.distance(&exact))
}

/// Simulates the family from its `t = 0` state at every resolution and
/// measures the L² error against the closed form at `t_check`. Also halves
/// `dt` at the finest resolution to estimate the temporal order.
pub fn exact_family_verification(
    spec: &FamilySpec,
    resolutions: &[usize],
    params: &PhysParams,
    cfg: &StepperConfig,
    t_check: f64,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    if resolutions.is_empty() {
        return Err(Error::InvalidInput("at least one resolution is required".into()));
    }
    if !(t_check.is_finite() && t_check >= 0.0) {
        return Err(Error::InvalidInput(format!("t_check must be ≥ 0, got {t_check}")));
    }
    let mut ns = resolutions.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let errors = ns
        .iter()
        .map(|&n| error_at(spec, n, params, cfg, t_check))
        .collect::<Result<Vec<f64>>>()?;

    let finest = *ns.last().expect("non-empty");
    let finest_error = *errors.last().expect("non-empty");
    let halved = StepperConfig {
        dt: cfg.dt / 2.0,
        ..cfg.clone()
    };
    let halved_error = error_at(spec, finest, params, &halved, t_check)?;

    let decaying = errors.windows(2).all(|w| w[1] <= w[0] || w[1] < ERROR_FLOOR);
    let mut report = ExperimentReport::new(
        "exact_family_verification",
        json!({ "family": spec.family.name(), "resolutions": ns, "t_check": t_check }),
    );
    for (n, e) in ns.iter().zip(&errors) {
        report.set(&format!("error_n{n}"), *e);
    }
    report.set("max_error", errors.iter().copied().fold(0.0, f64::max));
    report.set("finest_error", finest_error);
    report.set("finest_error_half_dt", halved_error);
    if finest_error > ORDER_FLOOR && halved_error > ORDER_FLOOR {
        report.set("dt_order", (finest_error / halved_error).log2());
    }
    report.flag("errors_decay_with_n", decaying);
    report.pass = finest_error < FINEST_TOL && decaying;

    if let Some(path) = out_path(out_dir, "errors.csv")? {
        let mut rows: Vec<Vec<f64>> = ns.iter().zip(&errors).map(|(n, e)| vec![*n as f64, cfg.dt, *e]).collect();
        rows.push(vec![finest as f64, halved.dt, halved_error]);
        write_series(&path, "n,dt,error", &rows)?;
        report.series_paths.push(path);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Family;
    use std::f64::consts::PI;

    #[test]
    fn horizontal_family_converges() {
        let p = PhysParams::new(0.1, 1.0, 2.0 * PI).unwrap();
        let cfg = StepperConfig::new(1e-3, 0.2);
        let spec = FamilySpec::new(Family::Horizontal);
        let r = exact_family_verification(&spec, &[16, 8], &p, &cfg, 0.2, None).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.metric("error_n8").is_some() && r.metric("error_n16").is_some());
    }

    #[test]
    fn unresolvable_mode_is_an_error() {
        let p = PhysParams::new(0.1, 1.0, 2.0 * PI).unwrap();
        let cfg = StepperConfig::new(1e-3, 0.1);
        let spec = FamilySpec { velocity_mode: 5, ..FamilySpec::new(Family::Vertical) };
        assert!(exact_family_verification(&spec, &[8], &p, &cfg, 0.1, None).is_err());
        assert!(exact_family_verification(&spec, &[], &p, &cfg, 0.1, None).is_err());
    }
}
