use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::batch::RunSummary;
use super::HarnessError;
use crate::solvers::{IterationRecord, Trace};

/// Column names of trace files, in order.
pub const TRACE_HEADER: &str =
    "iter,f,grad_norm_l2,local_grad_norm,stepsize,theta,backtracks,hessian_shift,elapsed_seconds";

/// Writes one row per record. Undefined stepsizes and `θ` are left empty;
/// reals are written in shortest round-trip form.
pub fn write_trace_csv(path: &Path, trace: &Trace) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    for rec in &trace.records {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<IterationRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != TRACE_HEADER {
        return Err(HarnessError::InvalidConfig(format!(
            "{} has header {header:?}",
            path.display()
        )));
    }
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_summary_json(path: &Path, summary: &RunSummary) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, summary)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
