use std::path::Path;

use serde_json::json;

use super::{add_summary, out_path, recorded_run, write_series, ExperimentReport};
use crate::diagnostics::{energy_spectrum, EnergySpectrum};
use crate::dynamics::{SimState, Sink, StepInfo, StepperConfig};
use crate::error::{Error, Result};
use crate::spectral::PhysParams;

/// Relative mismatch between shell sums and the energy treated as exact.
const PARTITION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TurbulenceSettings {
    /// Averaging window `[t₁, t₂]`; `None` uses the second half of the run.
    pub window: Option<[f64; 2]>,
    pub tail_fraction: f64,
}

impl Default for TurbulenceSettings {
    fn default() -> Self {
        Self {
            window: None,
            tail_fraction: 0.25,
        }
    }
}

#[derive(Default)]
struct SpectrumSink {
    samples: Vec<(f64, EnergySpectrum)>,
    partition_defect: f64,
}

impl Sink for SpectrumSink {
    fn record(&mut self, state: &SimState, params: &PhysParams, _info: &StepInfo) -> Result<()> {
        let s = energy_spectrum(state, params);
        let energy = state.u.norm_l2_sq();
        let total: f64 = s.shell_energy.iter().sum();
        let defect = if energy > 0.0 { (total - energy).abs() / energy } else { total.abs() };
        self.partition_defect = self.partition_defect.max(defect);
        self.samples.push((state.t, s));
        Ok(())
    }
}

/// Trapezoid time average of `f` over the samples inside `[t1, t2]`.
fn window_average(samples: &[(f64, EnergySpectrum)], t1: f64, t2: f64, f: impl Fn(&EnergySpectrum) -> Vec<f64>) -> Option<Vec<f64>> {
    let inside: Vec<_> = samples.iter().filter(|(t, _)| *t >= t1 && *t <= t2).collect();
    let first = inside.first()?;
    let width = f(&first.1).len();
    if inside.len() == 1 {
        return Some(f(&first.1));
    }
    let mut acc = vec![0.0; width];
    for w in inside.windows(2) {
        let dt = w[1].0 - w[0].0;
        for (a, (x, y)) in acc.iter_mut().zip(f(&w[0].1).into_iter().zip(f(&w[1].1))) {
            *a += 0.5 * dt * (x + y);
        }
    }
    let span = inside.last().expect("non-empty").0 - first.0;
    Some(acc.into_iter().map(|a| a / span).collect())
}

/// Long run emitting the `G_σ` series, `G*_σ`, and window-averaged shell
/// energies, `η` and `κ_η`. Passes when the shell sums reproduce the energy;
/// the spectra themselves are informational.
pub fn turbulence_diagnostics_run(
    initial: &SimState,
    params: &PhysParams,
    cfg: &StepperConfig,
    settings: &TurbulenceSettings,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    let [t1, t2] = settings
        .window
        .unwrap_or([initial.t + 0.5 * (cfg.t_end - initial.t), cfg.t_end]);
    if !(t1 <= t2) {
        return Err(Error::InvalidInput(format!("window [{t1}, {t2}] is empty")));
    }
    let mut sink = SpectrumSink::default();
    let csv = out_path(out_dir, "diagnostics.csv")?;
    let (_, records) = recorded_run(initial, params, cfg, csv.as_deref(), 1e-6, &mut [&mut sink])?;

    let mut report = ExperimentReport::new("turbulence_diagnostics", json!({ "window": [t1, t2] }));
    add_summary(&mut report, &records, params, settings.tail_fraction);
    report.set("window_start", t1);
    report.set("window_end", t2);
    report.set("shell_partition_defect", sink.partition_defect);
    let shells = window_average(&sink.samples, t1, t2, |s| s.shell_energy.clone());
    let eta = window_average(&sink.samples, t1, t2, |s| vec![s.eta]).map(|v| v[0]);
    if let Some(eta) = eta {
        report.set("eta_mean", eta);
        report.set("kappa_eta", (eta / params.nu.powi(3)).powf(1.0 / 6.0));
    }
    if let Some(avg) = &shells {
        let s = EnergySpectrum {
            shell_edges: sink.samples[0].1.shell_edges.clone(),
            shell_energy: avg.clone(),
            eta: eta.unwrap_or(0.0),
            kappa_eta: 0.0,
        };
        if let Some(slope) = s.log_slope(1..avg.len()) {
            report.set("mean_spectrum_log_slope", slope);
        }
    }
    report.pass = sink.partition_defect < PARTITION_TOL;

    if let (Some(path), Some(avg)) = (out_path(out_dir, "spectrum.csv")?, &shells) {
        let edges = &sink.samples[0].1.shell_edges;
        let rows: Vec<Vec<f64>> = edges.iter().zip(avg).map(|(k, e)| vec![*k, 2.0 * k, *e]).collect();
        write_series(&path, "kappa_low,kappa_high,mean_shell_energy", &rows)?;
        report.series_paths.push(path);
    }
    report.series_paths.extend(csv);
    Ok(report)
}
