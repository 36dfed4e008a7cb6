//! Trace CSV files: `iter, x_1..x_P, loop_count, kernel_tag`, one row per
//! state with the initial state first (loop count 0, tag `init`).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernels::{KernelTag, StepStats};
use crate::trace::Trace;

pub const INIT_TAG: &str = "init";

pub fn write_trace<W: Write>(trace: &Trace, out: W) -> Result<()> {
    let p = trace.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iter".to_string()];
    header.extend((1..=p).map(|j| format!("x_{j}")));
    header.push("loop_count".into());
    header.push("kernel_tag".into());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(p + 3);
    for (i, row) in trace.rows().enumerate() {
        record.clear();
        record.push((i + 1).to_string());
        record.extend(row.iter().map(|v| format!("{v:.16e}")));
        if i == 0 {
            record.push("0".into());
            record.push(INIT_TAG.into());
        } else {
            let s = &trace.stats()[i - 1];
            record.push(s.loop_count.to_string());
            record.push(s.kernel.as_str().into());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(trace: &Trace, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_trace(trace, std::io::BufWriter::new(f))
}

/// Reads a trace written by [`write_trace`]; `burn_in` is set by the caller.
pub fn read_trace<R: Read>(input: R, burn_in: usize) -> Result<Trace> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 4 || &header[0] != "iter" || &header[cols - 2] != "loop_count" || &header[cols - 1] != "kernel_tag" {
        return Err(Error::Diagnostics("trace header must be iter, x_1..x_P, loop_count, kernel_tag".into()));
    }
    let p = cols - 3;
    let mut states = Vec::new();
    let mut stats = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        for j in 1..=p {
            let v: f64 = rec[j]
                .parse()
                .map_err(|_| Error::Diagnostics(format!("row {}: bad value {:?}", k + 1, &rec[j])))?;
            states.push(v);
        }
        let tag = &rec[cols - 1];
        if k == 0 {
            continue;
        }
        let kernel = KernelTag::parse(tag)
            .ok_or_else(|| Error::Diagnostics(format!("row {}: unknown kernel tag {tag:?}", k + 1)))?;
        let loop_count = rec[cols - 2]
            .parse()
            .map_err(|_| Error::Diagnostics(format!("row {}: bad loop count", k + 1)))?;
        stats.push(StepStats { loop_count, kernel, accepted: None });
    }
    if states.is_empty() {
        return Err(Error::Diagnostics("trace file has no rows".into()));
    }
    Ok(Trace::from_parts(p, states, stats, burn_in))
}

pub fn read_trace_file(path: &Path, burn_in: usize) -> Result<Trace> {
    let f = std::fs::File::open(path)?;
    read_trace(std::io::BufReader::new(f), burn_in)
}

pub fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(f), value)?;
    Ok(())
}
