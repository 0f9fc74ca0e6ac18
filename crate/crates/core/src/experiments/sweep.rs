use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_experiment, ExperimentKind, ExperimentReport};
use crate::error::{Error, Result};
use crate::io::config::RunConfig;

pub const SWEEP_HEADER: &str = "index,name,G,G_star_sigma,final_energy,final_enstrophy,in_lambda_region,pass,error";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "one")]
    pub parallelism: usize,
    /// Output root; each run writes into `run_NNN` below it.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    pub runs: Vec<RunConfig>,
}

fn one() -> usize {
    1
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if cfg.parallelism == 0 {
            return Err(Error::Validation("parallelism must be ≥ 1".into()));
        }
        for (i, run) in cfg.runs.iter().enumerate() {
            run.validate()
                .map_err(|e| Error::Validation(format!("runs[{i}]: {e}")))?;
        }
        Ok(cfg)
    }
}

/// Runs every config as `kind` on `parallelism` threads. Reports come back
/// in config order; a failing run yields a report carrying its error.
pub fn sweep(
    kind: ExperimentKind,
    configs: &[RunConfig],
    parallelism: usize,
    out_dir: Option<&Path>,
) -> Result<Vec<ExperimentReport>> {
    if parallelism == 0 {
        return Err(Error::InvalidInput("parallelism must be ≥ 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let reports = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, cfg)| {
                let dir = out_dir.map(|d| d.join(format!("run_{i:03}")));
                let result = run_experiment(kind, cfg, dir.as_deref()).and_then(|r| {
                    if let Some(d) = &dir {
                        r.write_json(&d.join("report.json"))?;
                    }
                    Ok(r)
                });
                result.unwrap_or_else(|e| {
                    let params = serde_json::to_value(cfg).unwrap_or_default();
                    ExperimentReport::failed(kind.name(), params, &e)
                })
            })
            .collect::<Vec<_>>()
    });
    if let Some(d) = out_dir {
        std::fs::create_dir_all(d)?;
        write_sweep_csv(&reports, &d.join("sweep.csv"))?;
    }
    Ok(reports)
}

fn cell(r: &ExperimentReport, key: &str) -> String {
    r.metric(key).map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn write_sweep_csv(reports: &[ExperimentReport], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SWEEP_HEADER}")?;
    for (i, r) in reports.iter().enumerate() {
        let region = r.metric("in_lambda_region").map(|x| (x as u8).to_string()).unwrap_or_default();
        let error = r.error.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
        writeln!(
            w,
            "{i},{},{},{},{},{},{region},{},{error}",
            r.name,
            cell(r, "G"),
            cell(r, "G_star_sigma"),
            cell(r, "final_energy"),
            cell(r, "final_enstrophy"),
            r.pass as u8,
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::parse_config;

    fn config(theta_l2: f64) -> RunConfig {
        let text = format!(
            r#"{{
                "grid": {{"n": 16}},
                "physics": {{"nu": 1.0, "g": 1.0}},
                "initial": {{"kind": "random", "seed": 2, "u_l2": 0.1, "theta_l2": {theta_l2}}},
                "stepper": {{"dt": 0.002, "t_end": 0.2, "sample_every": 5}}
            }}"#
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn empty_sweep() {
        assert!(sweep(ExperimentKind::TurbulenceDiagnostics, &[], 2, None).unwrap().is_empty());
        assert!(sweep(ExperimentKind::TurbulenceDiagnostics, &[], 0, None).is_err());
    }

    #[test]
    fn grashof_column_is_linear_and_parallelism_invariant() {
        let configs: Vec<RunConfig> = [0.1, 1.0, 10.0].into_iter().map(config).collect();
        let serial = sweep(ExperimentKind::TurbulenceDiagnostics, &configs, 1, None).unwrap();
        let parallel = sweep(ExperimentKind::TurbulenceDiagnostics, &configs, 3, None).unwrap();
        assert_eq!(serial, parallel);
        let g: Vec<f64> = serial.iter().map(|r| r.metric("G").unwrap()).collect();
        assert!((g[1] / g[0] - 10.0).abs() < 1e-12 && (g[2] / g[1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn errors_are_isolated() {
        let configs = vec![config(1.0), config(0.0)];
        let reports = sweep(ExperimentKind::AbsorbingBall, &configs, 2, None).unwrap();
        assert!(reports[0].error.is_none(), "{:?}", reports[0].error);
        assert!(reports[1].error.is_some() && !reports[1].pass);
        let dir = tempfile::tempdir().unwrap();
        write_sweep_csv(&reports, &dir.path().join("s.csv")).unwrap();
        let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.split(',').count() == SWEEP_HEADER.split(',').count()));
    }
}
