//! Diagnostic CSV: fixed header, `{:.16e}` floats (17 significant digits),
//! LF line endings, empty cells for undefined quotients.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{DiagRecord, DiagRecorder};
use crate::dynamics::{SimState, Sink, StepInfo};
use crate::error::Result;
use crate::spectral::PhysParams;

pub const CSV_HEADER: &str = "t,energy,enstrophy,theta_l2,theta_lp1,theta_lp2,theta_lp4,theta_lpinf,g_sigma,chi,lambda,mean_u1,mean_u2,mean_theta,in_lambda_region,cfl";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn format_row(r: &DiagRecord) -> String {
    [
        num(r.t),
        num(r.energy),
        num(r.enstrophy),
        num(r.theta_l2),
        num(r.theta_lp.l1),
        num(r.theta_lp.l2),
        num(r.theta_lp.l4),
        num(r.theta_lp.linf),
        num(r.g_sigma),
        opt(r.chi),
        opt(r.lambda),
        num(r.mean_u1),
        num(r.mean_u2),
        num(r.mean_theta),
        (r.in_lambda_region as u8).to_string(),
        num(r.cfl),
    ]
    .join(",")
}

pub fn write_records(w: &mut impl Write, records: &[DiagRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", format_row(r))?;
    }
    Ok(())
}

pub fn write_diagnostics(records: &[DiagRecord], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_records(&mut w, records)?;
    w.flush()?;
    Ok(())
}

/// Streams one CSV row per sample while keeping the records in memory.
pub struct CsvSink {
    path: PathBuf,
    writer: Option<BufWriter<File>>,
    pub recorder: DiagRecorder,
}

impl CsvSink {
    pub fn create(path: &Path, region_tol: f64) -> Result<Self> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{CSV_HEADER}")?;
        Ok(Self {
            path: path.to_path_buf(),
            writer: Some(w),
            recorder: DiagRecorder::new(region_tol),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn records(&self) -> &[DiagRecord] {
        &self.recorder.records
    }
}

impl Sink for CsvSink {
    fn record(&mut self, state: &SimState, params: &PhysParams, info: &StepInfo) -> Result<()> {
        self.recorder.record(state, params, info)?;
        if let (Some(w), Some(r)) = (self.writer.as_mut(), self.recorder.records.last()) {
            writeln!(w, "{}", format_row(r))?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if let Some(mut w) = self.writer.take() {
            w.flush()?;
        }
        Ok(())
    }
}
