//! Trace CSV: one row per step with the five fixture flows and their total.
//!
//! ```text
//! t,toilet,shower,faucet,clothes_washer,dishwasher,total
//! 0,0,0,0.7,0,0,0.7
//! 10,1.1,0,0.7,0,0,1.8
//! ```
//!
//! `t` is the step start in seconds and must advance by a constant step.
//! On read the `total` column is checked against the fixture sum.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use aggsense_core::simulator::{aggregate_step, FixtureTrace, HouseholdSeries, DEFAULT_STEP_SECONDS};
use aggsense_core::{FIXTURES, N_LABELS};

use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; N_LABELS + 2] = [
    "t",
    "toilet",
    "shower",
    "faucet",
    "clothes_washer",
    "dishwasher",
    "total",
];

/// Largest accepted gap between `total` and the fixture sum.
pub const TOTAL_TOLERANCE: f64 = 1e-9;

pub fn write_trace_csv<W: Write>(series: &HouseholdSeries, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    let step = u64::from(series.step_seconds);
    for t in 0..series.len() {
        let flows = series.flows_at(t);
        let mut row = Vec::with_capacity(N_LABELS + 2);
        row.push((t as u64 * step).to_string());
        row.extend(flows.iter().map(f64::to_string));
        row.push(series.aggregate[t].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv<R: Read>(input: R, context: &str) -> Result<HouseholdSeries> {
    let fail = |line: u64, msg: String| Error::format(context, format!("line {line}: {msg}"));
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(|e| Error::format(context, e.to_string()))?;
    if header.iter().ne(TRACE_HEADER) {
        return Err(fail(1, format!("malformed header, expected {}", TRACE_HEADER.join(","))));
    }
    let mut flows: Vec<Vec<f64>> = vec![Vec::new(); N_LABELS];
    let mut prev_t: Option<u64> = None;
    let mut step: Option<u64> = None;
    for record in r.records() {
        let record = record.map_err(|e| Error::format(context, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != TRACE_HEADER.len() {
            return Err(fail(line, format!("expected {} fields, found {}", TRACE_HEADER.len(), record.len())));
        }
        let t: u64 = record[0]
            .trim()
            .parse()
            .map_err(|_| fail(line, format!("bad timestamp '{}'", &record[0])))?;
        let mut row = [0.0; N_LABELS];
        for (k, slot) in row.iter_mut().enumerate() {
            let v: f64 = record[k + 1]
                .trim()
                .parse()
                .map_err(|_| fail(line, format!("bad {} value '{}'", TRACE_HEADER[k + 1], &record[k + 1])))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(fail(line, format!("negative flow for {}", TRACE_HEADER[k + 1])));
            }
            *slot = v;
        }
        let total: f64 = record[N_LABELS + 1]
            .trim()
            .parse()
            .map_err(|_| fail(line, format!("bad total '{}'", &record[N_LABELS + 1])))?;
        let gap = (total - aggregate_step(&row)).abs();
        if gap.is_nan() || gap > TOTAL_TOLERANCE {
            return Err(fail(line, "total does not match the fixture sum".into()));
        }
        if let Some(p) = prev_t {
            if t <= p {
                return Err(fail(line, "non-monotone timestamps".into()));
            }
            match step {
                None => step = Some(t - p),
                Some(s) if t - p != s => {
                    return Err(fail(line, format!("irregular timestamps (step {s} s, got {} s)", t - p)));
                }
                Some(_) => {}
            }
        }
        prev_t = Some(t);
        for (k, v) in row.into_iter().enumerate() {
            flows[k].push(v);
        }
    }
    if flows[0].is_empty() {
        return Err(Error::format(context, "trace has no rows"));
    }
    let step_seconds = match step {
        None => DEFAULT_STEP_SECONDS,
        Some(s) => u32::try_from(s).map_err(|_| Error::format(context, "step too large"))?,
    };
    let traces = FIXTURES
        .iter()
        .zip(flows)
        .map(|(&fixture, flow)| FixtureTrace { fixture, flow })
        .collect();
    Ok(HouseholdSeries::from_traces(step_seconds, traces, None)?)
}

pub fn save_trace(series: &HouseholdSeries, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_csv(series, BufWriter::new(file)).map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

pub fn load_trace(path: &Path) -> Result<HouseholdSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace_csv(BufReader::new(file), &path.display().to_string())
}
