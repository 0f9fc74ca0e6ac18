use std::path::Path;

use serde_json::json;

use super::{add_summary, out_path, recorded_run, write_series, ExperimentReport};
use crate::diagnostics::{least_squares_slope, lambda_region_check, ZERO_VELOCITY};
use crate::dynamics::{full_velocity_tendency, SimState, Sink, StepInfo, StepperConfig};
use crate::error::Result;
use crate::spectral::PhysParams;

/// Points along each boundary curve of the region file.
const REGION_POINTS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSettings {
    /// Relative slack on the parabola side of Λ.
    pub region_tol: f64,
    /// Smoothed slopes above this count as a failure to decrease.
    pub dead_band: f64,
}

impl Default for TraceSettings {
    fn default() -> Self {
        Self {
            region_tol: 1e-6,
            dead_band: 1e-8,
        }
    }
}

/// Exact `dχ/dt` from the velocity tendency, using
/// `d‖u‖²_ℍ¹/dt = 2⟨Au, uₜ⟩` and `d‖u‖²/dt = 2⟨u, uₜ⟩`.
pub fn chi_rate(state: &SimState, params: &PhysParams) -> Result<Option<f64>> {
    let u = &state.u;
    let norm = u.norm_l2();
    if norm <= ZERO_VELOCITY {
        return Ok(None);
    }
    let ut = full_velocity_tendency(state, params)?;
    let dh1 = 2.0 * u.stokes().inner(&ut);
    let de = 2.0 * u.inner(&ut);
    Ok(Some(dh1 / norm - u.norm_h1_sq() * de / (2.0 * norm.powi(3))))
}

#[derive(Default)]
struct TraceSink {
    rates: Vec<Option<f64>>,
    theta_l2: Vec<f64>,
}

impl Sink for TraceSink {
    fn record(&mut self, state: &SimState, params: &PhysParams, _info: &StepInfo) -> Result<()> {
        self.rates.push(chi_rate(state, params)?);
        self.theta_l2.push(state.theta.norm_l2());
        Ok(())
    }
}

/// Traces `(‖u‖², ‖u‖²_ℍ¹, χ, λ)` and checks that χ decreases above
/// `g‖θ₀‖/ν`, that the trajectory stays in Λ once inside, and the Poincaré
/// floor `λ ≥ κ₀²`.
pub fn energy_enstrophy_trace(
    initial: &SimState,
    params: &PhysParams,
    cfg: &StepperConfig,
    settings: &TraceSettings,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    let mut sink = TraceSink::default();
    let csv = out_path(out_dir, "diagnostics.csv")?;
    let (last, records) = recorded_run(initial, params, cfg, csv.as_deref(), settings.region_tol, &mut [&mut sink])?;
    let theta0 = initial.theta.norm_l2();
    let b = params.g * theta0 / params.nu;
    let k0sq = initial.grid().kappa0().powi(2);

    let mut slope_violations = 0usize;
    let mut rate_violations = 0usize;
    let mut checked = 0usize;
    let mut max_slope = f64::NEG_INFINITY;
    for i in 0..records.len() {
        let Some(chi) = records[i].chi else { continue };
        if chi <= b * (1.0 + settings.region_tol) {
            continue;
        }
        checked += 1;
        if let Some(rate) = sink.rates[i] {
            if rate >= 0.0 {
                rate_violations += 1;
            }
        }
        if i < 2 || i + 2 >= records.len() {
            continue;
        }
        let window = &records[i - 2..=i + 2];
        if window.iter().any(|r| r.chi.is_none()) {
            continue;
        }
        let t: Vec<f64> = window.iter().map(|r| r.t).collect();
        let c: Vec<f64> = window.iter().map(|r| r.chi.expect("checked")).collect();
        if let Some(slope) = least_squares_slope(&t, &c) {
            max_slope = max_slope.max(slope);
            if slope > settings.dead_band {
                slope_violations += 1;
            }
        }
    }

    let entry = records.iter().position(|r| r.in_lambda_region);
    let exits = entry.map_or(0, |e| records[e..].iter().filter(|r| !r.in_lambda_region).count());
    let poincare = records.iter().all(|r| r.lambda.is_none_or(|l| l >= k0sq));
    let final_inside = lambda_region_check(&last.u, theta0, params, settings.region_tol);
    let theta_drift = sink
        .theta_l2
        .iter()
        .map(|t| (t - theta0).abs() / theta0.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    let mut report = ExperimentReport::new("energy_enstrophy_trace", json!({}));
    add_summary(&mut report, &records, params, 0.25);
    report.set("chi_threshold", b);
    report.set("decrease_checks", checked as f64);
    report.set("slope_violations", slope_violations as f64);
    report.set("rate_violations", rate_violations as f64);
    if max_slope.is_finite() {
        report.set("max_slope_above_threshold", max_slope);
    }
    if let Some(e) = entry {
        report.set("lambda_entry_time", records[e].t);
    }
    report.set("lambda_region_exits", exits as f64);
    report.flag("poincare_floor_holds", poincare);
    report.flag("final_in_lambda_region", final_inside);
    report.set("theta_l2_relative_drift", theta_drift);
    report.pass = entry.is_some() && exits == 0 && poincare && slope_violations == 0 && rate_violations == 0;

    if let Some(path) = out_path(out_dir, "trace.csv")? {
        let rows: Vec<Vec<f64>> = records
            .iter()
            .zip(&sink.rates)
            .map(|(r, rate)| {
                vec![
                    r.t,
                    r.energy,
                    r.enstrophy,
                    r.chi.unwrap_or(f64::NAN),
                    r.lambda.unwrap_or(f64::NAN),
                    rate.unwrap_or(f64::NAN),
                ]
            })
            .collect();
        write_series(&path, "t,energy,enstrophy,chi,lambda,chi_rate", &rows)?;
        report.series_paths.push(path);
    }
    if let Some(path) = out_path(out_dir, "region.csv")? {
        let e_max = records.iter().map(|r| r.energy).fold(0.0, f64::max).max(f64::MIN_POSITIVE) * 1.1;
        let rows: Vec<Vec<f64>> = (0..=REGION_POINTS)
            .map(|j| {
                let e = e_max * j as f64 / REGION_POINTS as f64;
                vec![e, b * e.sqrt(), k0sq * e]
            })
            .collect();
        write_series(&path, "energy,parabola_enstrophy,poincare_enstrophy", &rows)?;
        report.series_paths.push(path);
    }
    report.series_paths.extend(csv);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SimState;
    use crate::exact::eigen_steady_state;
    use crate::random::{random_state, RandomSpec};
    use crate::spectral::{Grid, SpectralScalar};
    use std::f64::consts::PI;

    #[test]
    fn rate_matches_finite_difference() {
        let grid = Grid::new(32, 2.0 * PI).unwrap();
        let p = PhysParams::new(0.05, 1.0, 2.0 * PI).unwrap();
        let spec = RandomSpec { seed: 5, k_peak: 3.0, u_l2: 1.0, theta_l2: 1.0 };
        let s = random_state(&grid, &spec).unwrap();
        let chi = |s: &SimState| s.u.norm_h1_sq() / s.u.norm_l2();
        let h = 1e-4;
        let cfg = StepperConfig::new(h, 1.0);
        let fwd = crate::dynamics::step(&s, &p, &cfg).unwrap();
        let fwd2 = crate::dynamics::step(&fwd, &p, &cfg).unwrap();
        // second-order one-sided difference
        let fd = (-3.0 * chi(&s) + 4.0 * chi(&fwd) - chi(&fwd2)) / (2.0 * h);
        let exact = chi_rate(&s, &p).unwrap().unwrap();
        assert!((fd - exact).abs() < 1e-5 * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn boundary_steady_state_is_stationary() {
        let grid = Grid::new(16, 2.0 * PI).unwrap();
        let p = PhysParams::new(0.1, 1.0, 2.0 * PI).unwrap();
        let (u, theta) = eigen_steady_state(&grid, 2, 0.5, &p).unwrap();
        let s = SimState::new(u, theta, 0.0).unwrap();
        let rate = chi_rate(&s, &p).unwrap().unwrap();
        assert!(rate.abs() < 1e-12, "{rate}");
        let b = p.g * s.theta.norm_l2() / p.nu;
        let chi = s.u.norm_h1_sq() / s.u.norm_l2();
        assert!((chi - b).abs() < 1e-12 * b);
        let cfg = StepperConfig { sample_every: 10, ..StepperConfig::new(0.01, 1.0) };
        let r = energy_enstrophy_trace(&s, &p, &cfg, &TraceSettings::default(), None).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.metric("lambda_entry_time"), Some(0.0));
    }

    #[test]
    fn pure_decay_keeps_poincare_floor() {
        let grid = Grid::new(16, 2.0 * PI).unwrap();
        let p = PhysParams::new(0.1, 1.0, 2.0 * PI).unwrap();
        let spec = RandomSpec { seed: 9, k_peak: 2.0, u_l2: 1.0, theta_l2: 0.0 };
        let mut s = random_state(&grid, &spec).unwrap();
        s.theta = SpectralScalar::zeros(&grid);
        let cfg = StepperConfig { sample_every: 5, ..StepperConfig::new(0.01, 1.0) };
        let r = energy_enstrophy_trace(&s, &p, &cfg, &TraceSettings::default(), None).unwrap();
        assert_eq!(r.metric("poincare_floor_holds"), Some(1.0));
        assert_eq!(r.metric("slope_violations"), Some(0.0));
        assert_eq!(r.metric("rate_violations"), Some(0.0));
        assert!(r.metric("lambda_entry_time").is_none());
        assert!(!r.pass);
    }
}
