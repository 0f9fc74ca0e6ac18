use std::path::Path;

use serde_json::json;

use super::{add_summary, out_path, recorded_run, ExperimentReport};
use crate::diagnostics::grashof;
use crate::dynamics::{SimState, StepperConfig};
use crate::error::{Error, Result};
use crate::spectral::PhysParams;

/// Absolute slack on the pointwise energy bound.
const ENERGY_SLACK: f64 = 1e-8;

/// `t* = max(1, log(‖u₀‖²/(3ν²G²)))/(νκ₀²)`.
pub fn absorption_time(u0_l2: f64, g_number: f64, params: &PhysParams) -> f64 {
    let nu = params.nu;
    let rate = nu * params.kappa0().powi(2);
    let log = (u0_l2 * u0_l2 / (3.0 * nu * nu * g_number * g_number)).ln();
    log.max(1.0) / rate
}

/// Runs to `2t*` and checks the ball `‖u‖ ≤ 2νG` after `t*` and the energy
/// bound `‖u‖² ≤ e^{-νκ₀²t}‖u₀‖² + ν²G²(1 - e^{-νκ₀²t})` throughout.
pub fn absorbing_ball_experiment(
    initial: &SimState,
    params: &PhysParams,
    cfg: &StepperConfig,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    let theta0 = initial.theta.norm_l2();
    let g_number = grashof(theta0, params);
    if !(g_number > 0.0) {
        return Err(Error::InvalidInput("absorbing ball needs G > 0".into()));
    }
    let nu = params.nu;
    let rate = nu * params.kappa0().powi(2);
    let u0 = initial.u.norm_l2();
    let t_star = absorption_time(u0, g_number, params);
    let radius = 2.0 * nu * g_number;

    let mut run_cfg = cfg.clone();
    run_cfg.t_end = initial.t + 2.0 * t_star;
    let csv = out_path(out_dir, "diagnostics.csv")?;
    let (_, records) = recorded_run(initial, params, &run_cfg, csv.as_deref(), 1e-6, &mut [])?;

    let vg2 = (nu * g_number).powi(2);
    let mut energy_excess = f64::NEG_INFINITY;
    let mut ball_ratio = 0.0f64;
    let mut first_entry = None;
    for r in &records {
        let s = r.t - initial.t;
        let e = (-rate * s).exp();
        let bound = e * u0 * u0 + vg2 * (1.0 - e);
        energy_excess = energy_excess.max(r.energy - bound);
        let norm = r.energy.sqrt();
        if first_entry.is_none() && norm <= radius {
            first_entry = Some(s);
        }
        if s > t_star {
            ball_ratio = ball_ratio.max(norm / radius);
        }
    }

    let mut report = ExperimentReport::new("absorbing_ball", json!({}));
    add_summary(&mut report, &records, params, 0.25);
    report.set("t_star", t_star);
    report.set("ball_radius", radius);
    report.set("u0_l2", u0);
    report.set("max_energy_excess", energy_excess);
    report.set("max_ball_ratio_after_t_star", ball_ratio);
    if let Some(s) = first_entry {
        report.set("first_entry_time", s);
    }
    let energy_ok = energy_excess <= ENERGY_SLACK;
    let ball_ok = ball_ratio <= 1.0;
    report.flag("energy_bound_holds", energy_ok);
    report.flag("ball_holds_after_t_star", ball_ok);
    report.pass = energy_ok && ball_ok;
    report.series_paths.extend(csv);
    Ok(report)
}
