use std::path::Path;

use serde_json::json;

use super::{add_summary, out_path, recorded_run, write_series, ExperimentReport};
use crate::diagnostics::{grashof, grashof_sigma};
use crate::dynamics::{full_velocity_tendency, SimState, Sink, StepInfo, StepperConfig};
use crate::error::{Error, Result};
use crate::spectral::{PhysParams, SpectralScalar, SpectralVector};

/// Velocity snapshots kept for the decay curve before thinning.
const MAX_STORED: usize = 256;

#[derive(Clone, Debug)]
pub struct SteadySettings {
    /// Largest accepted Grashof number.
    pub epsilon: f64,
    /// Full-tendency L² norm counted as steady.
    pub residual_tol: f64,
    /// Starting velocity; `None` starts from rest.
    pub initial_velocity: Option<SpectralVector>,
}

impl Default for SteadySettings {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            residual_tol: 1e-9,
            initial_velocity: None,
        }
    }
}

struct ResidualMonitor {
    tol: f64,
    residuals: Vec<(f64, f64)>,
    stored: Vec<(f64, SpectralVector)>,
    stride: usize,
    seen: usize,
    failed: Option<Error>,
}

impl Sink for ResidualMonitor {
    fn record(&mut self, state: &SimState, params: &PhysParams, _info: &StepInfo) -> Result<()> {
        let r = full_velocity_tendency(state, params)?.norm_l2();
        self.residuals.push((state.t, r));
        if self.seen.is_multiple_of(self.stride) {
            self.stored.push((state.t, state.u.clone()));
            if self.stored.len() > MAX_STORED {
                let kept: Vec<_> = self.stored.drain(..).step_by(2).collect();
                self.stored = kept;
                self.stride *= 2;
            }
        }
        self.seen += 1;
        if !r.is_finite() {
            self.failed = Some(Error::NonFinite { t: state.t });
        }
        Ok(())
    }

    fn should_stop(&self) -> bool {
        self.failed.is_some() || self.residuals.last().is_some_and(|&(_, r)| r < self.tol)
    }
}

/// `u₂ = (g/ν)(-Δ)⁻¹θ` for `θ = θ(x₁)`, or `None` when θ depends on `x₂`.
fn horizontal_reference(theta: &SpectralScalar, params: &PhysParams) -> Option<SpectralVector> {
    let g = theta.grid();
    let only_x1 = (0..g.len()).all(|i| g.wavenumber(i).1 == 0 || theta.coeffs()[i].norm() == 0.0);
    only_x1.then(|| {
        let u2 = theta.inverse_laplacian().scale(-params.g / params.nu);
        SpectralVector::new(SpectralScalar::zeros(g), u2).expect("one-dimensional fields are solenoidal")
    })
}

fn depends_on_x2_only(theta: &SpectralScalar) -> bool {
    let g = theta.grid();
    (0..g.len()).all(|i| g.wavenumber(i).0 == 0 || theta.coeffs()[i].norm() == 0.0)
}

/// Small-Grashof run until the full velocity tendency falls below
/// `residual_tol` or `cfg.t_end` is reached.
pub fn steady_convergence_experiment(
    theta0: &SpectralScalar,
    params: &PhysParams,
    cfg: &StepperConfig,
    settings: &SteadySettings,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    let g_number = grashof(theta0.norm_l2(), params);
    if g_number > settings.epsilon {
        return Err(Error::InvalidInput(format!(
            "G = {g_number} exceeds epsilon = {}",
            settings.epsilon
        )));
    }
    let grid = theta0.grid();
    let u0 = settings
        .initial_velocity
        .clone()
        .unwrap_or_else(|| SpectralVector::zeros(grid));
    let initial = SimState::new(u0, theta0.clone(), 0.0)?;
    let mut monitor = ResidualMonitor {
        tol: settings.residual_tol,
        residuals: Vec::new(),
        stored: Vec::new(),
        stride: 1,
        seen: 0,
        failed: None,
    };
    let csv = out_path(out_dir, "diagnostics.csv")?;
    let (last, records) = recorded_run(&initial, params, cfg, csv.as_deref(), 1e-6, &mut [&mut monitor])?;
    if let Some(e) = monitor.failed {
        return Err(e);
    }

    let mut report = ExperimentReport::new("steady_convergence", json!({}));
    add_summary(&mut report, &records, params, 0.25);
    let &(t_final, residual) = monitor.residuals.last().expect("at least one sample");
    report.set("final_residual", residual);
    report.set("residual_tol", settings.residual_tol);
    report.set("convergence_time", t_final);
    report.set("final_g_sigma", grashof_sigma(&last, params));
    report.set("final_u_l2", last.u.norm_l2());
    report.set("final_theta_l2", last.theta.norm_l2());
    if let Some(reference) = horizontal_reference(theta0, params) {
        report.set("distance_to_horizontal_steady", (&last.u - &reference).norm_l2());
    }
    if depends_on_x2_only(theta0) {
        report.set("distance_to_rest", last.u.norm_l2());
    }
    report.pass = residual < settings.residual_tol;

    if let Some(path) = out_path(out_dir, "convergence.csv")? {
        let mut stored = monitor.stored;
        let keep_final = stored.last().is_none_or(|(t, _)| *t != last.t);
        if keep_final {
            stored.push((last.t, last.u.clone()));
        }
        let residual_at = |t: f64| {
            monitor
                .residuals
                .iter()
                .find(|(s, _)| *s == t)
                .map_or(f64::NAN, |&(_, r)| r)
        };
        let rows: Vec<Vec<f64>> = stored
            .iter()
            .map(|(t, u)| vec![*t, residual_at(*t), (u - &last.u).norm_l2()])
            .collect();
        write_series(&path, "t,residual,distance_to_final", &rows)?;
        report.series_paths.push(path);
    }
    report.series_paths.extend(csv);
    Ok(report)
}
