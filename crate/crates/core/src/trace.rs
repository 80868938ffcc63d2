//! CSV export and import of recorded time series.
//!
//! Headers are `name[unit]`; flags are written as `0`/`1`. Values use the
//! shortest representation that parses back to the same `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::scenario::{Sample, TimeSeries, COLUMNS};

pub fn header(verbose: bool) -> Vec<String> {
    COLUMNS
        .iter()
        .filter(|c| verbose || !c.verbose)
        .map(|c| format!("{}[{}]", c.name, c.unit))
        .collect()
}

pub fn write_csv<W: Write>(ts: &TimeSeries, out: W, verbose: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(verbose))?;
    let keep: Vec<usize> = (0..COLUMNS.len()).filter(|&k| verbose || !COLUMNS[k].verbose).collect();
    for s in &ts.samples {
        let values = s.values();
        w.write_record(keep.iter().map(|&k| values[k].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(ts: &TimeSeries, path: impl AsRef<Path>, verbose: bool) -> Result<()> {
    write_csv(ts, BufWriter::new(File::create(path)?), verbose)
}

fn column_name(header: &str) -> &str {
    header.split('[').next().unwrap_or(header).trim()
}

/// Read a trace. `time` and `v_pcc` columns are required; other known
/// columns are filled in and unknown ones ignored.
pub fn read_csv<R: Read>(input: R) -> Result<TimeSeries> {
    let mut r = csv::Reader::from_reader(input);
    let map: Vec<Option<usize>> = r
        .headers()?
        .iter()
        .map(|h| COLUMNS.iter().position(|c| c.name == column_name(h)))
        .collect();
    for needed in ["time", "v_pcc"] {
        let idx = COLUMNS.iter().position(|c| c.name == needed);
        if !map.contains(&idx) {
            return Err(Error::Trace(format!("missing `{needed}` column")));
        }
    }
    let mut samples = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut s = Sample::default();
        for (field, slot) in rec.iter().zip(&map) {
            if let Some(k) = slot {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Trace(format!("row {}: cannot parse `{field}` in {}", line + 2, COLUMNS[*k].name))
                })?;
                s.set(*k, v);
            }
        }
        samples.push(s);
    }
    let ts = TimeSeries {
        samples,
        truncated: false,
    };
    ts.validate()?;
    Ok(ts)
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<TimeSeries> {
    read_csv(BufReader::new(File::open(path)?))
}
