//! File formats: scenario JSON-lines and parameter-matrix CSV.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scenario::{Dataset, Layout, Scenario};

/// Read one scenario per non-empty line.
pub fn read_scenarios_jsonl<R: BufRead>(reader: R) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let scenario: Scenario = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        scenario.validate()?;
        out.push(scenario);
    }
    Ok(out)
}

pub fn write_scenarios_jsonl<W: Write>(mut writer: W, scenarios: &[Scenario]) -> Result<()> {
    for s in scenarios {
        serde_json::to_writer(&mut writer, s)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// One parameter vector per row under a `sig.<name>.<k>` / `static.<name>` header.
pub fn write_dataset_csv<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(data.layout().column_names()).map_err(csv_err)?;
    for row in data.rows() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: std::io::Read>(reader: R) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let layout = Arc::new(Layout::from_column_names(&header)?);
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("dataset CSV has no rows".into()));
    }
    Dataset::from_rows(layout, rows)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut writer: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}
