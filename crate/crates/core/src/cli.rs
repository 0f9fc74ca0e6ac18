//! Command-line front end. Exit codes: 0 success or pass, 1 experiment
//! failure, 2 usage or configuration error, 3 runtime error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::diagnostics::{distribution_function, energy_spectrum, DiagRecord};
use crate::dynamics::{SimState, Sink, StepInfo, StepperConfig};
use crate::error::{Error, Result};
use crate::exact::{Family, FamilySpec};
use crate::experiments::{exact_family_verification, recorded_run, run_experiment, sweep, ExperimentKind, SweepConfig};
use crate::io::config::{load_config, DiagnosticOutput, RunConfig};
use crate::io::{read_snapshot, write_diagnostics, write_snapshot};
use crate::spectral::PhysParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Thresholds of the distribution-function output.
const DISTRIBUTION_THRESHOLDS: usize = 201;

#[derive(Parser, Debug)]
#[command(name = "boussinesq", about = "Semi-dissipative Boussinesq solver and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a configured run and write diagnostics and snapshots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `outputs.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a closed-form family against the solver.
    VerifyExact {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        t_check: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 0.1)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        g: f64,
    },
    /// Print diagnostics of a snapshot file.
    Diagnose {
        #[arg(long)]
        snapshot: PathBuf,
        /// Also write diagnostics.csv and spectrum.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named experiment and write its report.
    Experiment {
        name: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a list of experiments concurrently.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's `parallelism`.
        #[arg(long)]
        parallelism: Option<usize>,
    },
}

/// Files written by [`simulate`].
#[derive(Debug)]
pub struct SimulationOutput {
    pub final_state: SimState,
    pub records: Vec<DiagRecord>,
    pub files: Vec<PathBuf>,
}

struct SnapshotSink<'a> {
    dir: &'a Path,
    every: usize,
    samples: usize,
    files: Vec<PathBuf>,
}

impl Sink for SnapshotSink<'_> {
    fn record(&mut self, state: &SimState, params: &PhysParams, _info: &StepInfo) -> Result<()> {
        if self.every > 0 && self.samples.is_multiple_of(self.every) {
            let path = self.dir.join(format!("snapshot_{:05}.sdb", self.samples));
            write_snapshot(state, params, &path)?;
            self.files.push(path);
        }
        self.samples += 1;
        Ok(())
    }
}

/// Runs `cfg`, writing the configured outputs into `out_dir` (or
/// `outputs.dir`); with neither, nothing is written.
pub fn simulate(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<SimulationOutput> {
    let (_, params, initial) = cfg.initial_state()?;
    let tol = cfg.experiment.region_tol;
    let dir = out_dir.map(Path::to_path_buf).or_else(|| cfg.outputs.dir.clone());
    let Some(dir) = dir else {
        let (final_state, records) = recorded_run(&initial, &params, &cfg.stepper, None, tol, &mut [])?;
        return Ok(SimulationOutput { final_state, records, files: Vec::new() });
    };
    std::fs::create_dir_all(&dir)?;
    let wants = |d: DiagnosticOutput| cfg.outputs.diagnostics.contains(&d);
    let csv_path = wants(DiagnosticOutput::Csv).then(|| dir.join("diagnostics.csv"));
    let mut snaps = SnapshotSink { dir: &dir, every: cfg.outputs.snapshot_every, samples: 0, files: Vec::new() };
    let (final_state, records) =
        recorded_run(&initial, &params, &cfg.stepper, csv_path.as_deref(), tol, &mut [&mut snaps])?;
    let mut files: Vec<PathBuf> = csv_path.into_iter().collect();
    files.extend(snaps.files);
    let final_path = dir.join("final.sdb");
    write_snapshot(&final_state, &params, &final_path)?;
    files.push(final_path);
    if wants(DiagnosticOutput::Spectrum) {
        let path = dir.join("spectrum.json");
        let spectrum = energy_spectrum(&final_state, &params);
        std::fs::write(&path, serde_json::to_string_pretty(&spectrum)? + "\n")?;
        files.push(path);
    }
    if wants(DiagnosticOutput::Distribution) {
        let path = dir.join("distribution.csv");
        let f = distribution_function(&final_state.theta, DISTRIBUTION_THRESHOLDS)?;
        let rows: Vec<String> = f
            .thresholds
            .iter()
            .zip(&f.cdf)
            .map(|(r, c)| format!("{r:.16e},{c:.16e}"))
            .collect();
        std::fs::write(&path, format!("rho,fraction\n{}\n", rows.join("\n")))?;
        files.push(path);
    }
    Ok(SimulationOutput { final_state, records, files })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Validation(_) | Error::MissingPath(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn print_record(r: &DiagRecord) {
    println!("t = {:.6}", r.t);
    println!("  energy          {:.6e}", r.energy);
    println!("  enstrophy       {:.6e}", r.enstrophy);
    println!("  theta L2        {:.6e}", r.theta_l2);
    println!("  theta Linf      {:.6e}", r.theta_lp.linf);
    println!("  G_sigma         {:.6e}", r.g_sigma);
    if let (Some(chi), Some(lambda)) = (r.chi, r.lambda) {
        println!("  chi, lambda     {chi:.6e}, {lambda:.6e}");
    }
    println!("  in Lambda       {}", r.in_lambda_region);
}

fn experiment_dir(out: Option<PathBuf>, cfg: &RunConfig, name: &str) -> PathBuf {
    out.or_else(|| cfg.outputs.dir.clone()).unwrap_or_else(|| PathBuf::from("out").join(name))
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Simulate { config, out } => {
            let cfg = load_config(&config)?;
            let output = simulate(&cfg, out.as_deref())?;
            if let Some(last) = output.records.last() {
                print_record(last);
            }
            for f in &output.files {
                println!("wrote {}", f.display());
            }
            Ok(EXIT_OK)
        }
        Command::VerifyExact { family, n, t_check, dt, nu, g } => {
            let family: Family = family.parse().map_err(|e: Error| Error::Validation(e.to_string()))?;
            let params = PhysParams::new(nu, g, std::f64::consts::TAU).map_err(|e| Error::Validation(e.to_string()))?;
            crate::spectral::Grid::new(n, std::f64::consts::TAU).map_err(|e| Error::Validation(e.to_string()))?;
            let spec = FamilySpec::new(family);
            let cfg = StepperConfig { dt, t_end: t_check, ..StepperConfig::default() };
            cfg.validate().map_err(|e| Error::Validation(e.to_string()))?;
            let report = exact_family_verification(&spec, &[n], &params, &cfg, t_check, None)?;
            let err = report.metric("max_error").unwrap_or(f64::NAN);
            println!("{} n = {n} t = {t_check}: max L2 error {err:.3e}", family.name());
            if let Some(order) = report.metric("dt_order") {
                println!("observed temporal order {order:.2}");
            }
            println!("{}", if report.pass { "PASS" } else { "FAIL" });
            Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Diagnose { snapshot, out } => {
            let (state, params) = read_snapshot(&snapshot)?;
            let record = DiagRecord::from_state(&state, &params, state.theta.norm_l2(), f64::NAN, 1e-6);
            print_record(&record);
            let spectrum = energy_spectrum(&state, &params);
            println!("  eta, kappa_eta  {:.6e}, {:.6e}", spectrum.eta, spectrum.kappa_eta);
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                write_diagnostics(&[record], &dir.join("diagnostics.csv"))?;
                std::fs::write(dir.join("spectrum.json"), serde_json::to_string_pretty(&spectrum)? + "\n")?;
                println!("wrote {}", dir.display());
            }
            Ok(EXIT_OK)
        }
        Command::Experiment { name, config, out } => {
            let kind: ExperimentKind = name.parse().map_err(|e: Error| Error::Validation(e.to_string()))?;
            let cfg = load_config(&config)?;
            let dir = experiment_dir(out, &cfg, kind.name());
            let report = run_experiment(kind, &cfg, Some(&dir))?;
            let path = dir.join("report.json");
            report.write_json(&path)?;
            for (k, v) in &report.metrics {
                println!("  {k:<32} {v:.6e}");
            }
            println!("{}: {}", kind.name(), if report.pass { "PASS" } else { "FAIL" });
            println!("wrote {}", path.display());
            Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
        }
        Command::Sweep { config, out, parallelism } => {
            if !config.exists() {
                return Err(Error::MissingPath(config));
            }
            let cfg = SweepConfig::parse(&std::fs::read_to_string(&config)?)?;
            let dir = out.or(cfg.dir.clone()).unwrap_or_else(|| PathBuf::from("out").join("sweep"));
            let threads = parallelism.unwrap_or(cfg.parallelism);
            if threads == 0 {
                return Err(Error::Validation("parallelism must be ≥ 1".into()));
            }
            let reports = sweep(cfg.experiment, &cfg.runs, threads, Some(&dir))?;
            let passed = reports.iter().filter(|r| r.pass).count();
            for (i, r) in reports.iter().enumerate() {
                let status = match (&r.error, r.pass) {
                    (Some(e), _) => format!("ERROR {e}"),
                    (None, true) => "PASS".into(),
                    (None, false) => "FAIL".into(),
                };
                println!("run_{i:03} {status}");
            }
            println!("{passed}/{} passed; wrote {}", reports.len(), dir.join("sweep.csv").display());
            Ok(if passed == reports.len() { EXIT_OK } else { EXIT_FAIL })
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
