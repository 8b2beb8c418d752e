use std::io::{Read, Write};

use super::{GridRow, Layout, RateEstimate};
use crate::error::{Error, Result};
use crate::procedures::{HypothesisScale, Method};

pub const CSV_HEADER: [&str; 15] = [
    "layout",
    "setting",
    "scenario_index",
    "label",
    "m",
    "alpha",
    "method",
    "hypothesis_scale",
    "h0f_holds",
    "n_sim",
    "n_perm",
    "rejections",
    "rate",
    "mc_se",
    "deviation_pct",
];

fn csv_error(e: csv::Error) -> Error {
    Error::Config(format!("result table: {e}"))
}

/// Writes rows with a header, `\n` line endings and shortest round-trip
/// decimal formatting.
pub fn write_csv<W: Write>(rows: &[GridRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        let e = &r.estimate;
        w.write_record([
            r.layout.tag().to_string(),
            r.setting.to_string(),
            r.scenario_index.to_string(),
            r.label.clone(),
            r.m.to_string(),
            r.alpha.to_string(),
            r.method.tag().to_string(),
            r.hypothesis_scale.to_string(),
            r.h0f_holds.to_string(),
            r.n_sim.to_string(),
            r.n_perm.to_string(),
            e.rejections.to_string(),
            e.rate.to_string(),
            e.mc_se.to_string(),
            e.deviation_pct.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Config(format!("result table: {e}")))?;
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: u64) -> Result<T> {
    let raw = record.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        Error::Config(format!("result table line {line}: bad {} value '{raw}'", CSV_HEADER[i]))
    })
}

/// Reads a table written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<GridRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Config(format!(
            "result table header must be {}",
            CSV_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (k, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = k as u64 + 2;
        let layout: Layout = record[0].parse()?;
        let method: Method = record[6].parse()?;
        let scale = match record[7].trim() {
            "mean" => HypothesisScale::Mean,
            "distribution" => HypothesisScale::Distribution,
            other => {
                return Err(Error::Config(format!(
                    "result table line {line}: bad hypothesis_scale '{other}'"
                )))
            }
        };
        rows.push(GridRow {
            layout,
            setting: field(&record, 1, line)?,
            scenario_index: field(&record, 2, line)?,
            label: record[3].to_string(),
            m: field(&record, 4, line)?,
            alpha: field(&record, 5, line)?,
            method,
            hypothesis_scale: scale,
            h0f_holds: field(&record, 8, line)?,
            n_sim: field(&record, 9, line)?,
            n_perm: field(&record, 10, line)?,
            estimate: RateEstimate {
                rejections: field(&record, 11, line)?,
                n_sim: field(&record, 9, line)?,
                rate: field(&record, 12, line)?,
                mc_se: field(&record, 13, line)?,
                deviation_pct: field(&record, 14, line)?,
            },
        });
    }
    Ok(rows)
}
