//! Reading observations from `cell_id,value` CSV files.

use std::io::Read;

use factest_core::{Dataset, Design};

use crate::config::LayoutSpec;
use crate::error::{CliError, CliResult};

/// Parses a headered `cell_id,value` table. One-way cell ids are `1..=d`;
/// two-way ids are `i:j` with `i` in `1..=a` and `j` in `1..=b`, stored
/// A-major.
pub fn read_dataset<R: Read>(input: R, layout: LayoutSpec) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| CliError::parse(Some(1), e.to_string()))?
        .clone();
    if header.len() != 2 || &header[0] != "cell_id" || &header[1] != "value" {
        return Err(CliError::parse(Some(1), "header must be cell_id,value"));
    }
    let mut cells: Vec<Vec<f64>> = match layout {
        LayoutSpec::OneWay => Vec::new(),
        LayoutSpec::TwoWay { a, b } => vec![Vec::new(); a * b],
    };
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            CliError::parse(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line());
        if record.len() != 2 {
            return Err(CliError::parse(line, format!("expected 2 fields, found {}", record.len())));
        }
        let index = cell_index(&record[0], layout).map_err(|msg| CliError::parse(line, msg))?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| CliError::parse(line, format!("value '{}' is not a number", &record[1])))?;
        if !value.is_finite() {
            return Err(CliError::parse(line, format!("value '{}' is not finite", &record[1])));
        }
        if index >= cells.len() {
            cells.resize(index + 1, Vec::new());
        }
        cells[index].push(value);
    }
    if let Some(empty) = cells.iter().position(Vec::is_empty) {
        return Err(CliError::parse(None, format!("cell {} has no observations", cell_name(empty, layout))));
    }
    let sizes: Vec<usize> = cells.iter().map(Vec::len).collect();
    let design = match layout {
        LayoutSpec::OneWay => Design::one_way(sizes)?,
        LayoutSpec::TwoWay { a, b } => Design::two_way(a, b, sizes)?,
    };
    Ok(Dataset::new(design, cells)?)
}

fn cell_index(id: &str, layout: LayoutSpec) -> Result<usize, String> {
    let level = |s: &str, max: Option<usize>| -> Result<usize, String> {
        match s.trim().parse::<usize>() {
            Ok(v) if v >= 1 && max.is_none_or(|m| v <= m) => Ok(v - 1),
            _ => Err(format!("cell_id '{id}' is not a valid level")),
        }
    };
    match layout {
        LayoutSpec::OneWay => level(id, None),
        LayoutSpec::TwoWay { a, b } => {
            let (i, j) = id
                .split_once(':')
                .ok_or_else(|| format!("cell_id '{id}' must have the form i:j"))?;
            Ok(level(i, Some(a))? * b + level(j, Some(b))?)
        }
    }
}

fn cell_name(index: usize, layout: LayoutSpec) -> String {
    match layout {
        LayoutSpec::OneWay => (index + 1).to_string(),
        LayoutSpec::TwoWay { b, .. } => format!("{}:{}", index / b + 1, index % b + 1),
    }
}
