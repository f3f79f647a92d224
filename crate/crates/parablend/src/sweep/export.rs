//! CSV and JSON output of sweep reports.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GridRow, SweepError, SweepReport};

pub const GRID_HEADER_TAIL: [&str; 3] = ["sinks", "min_period", "max_period"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

fn opt(v: Option<usize>) -> String {
    v.map(|p| p.to_string()).unwrap_or_default()
}

/// One row per grid point; an empty report gives the header alone.
pub fn write_csv<W: Write>(rep: &SweepReport, out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=rep.k).map(|i| format!("a{i}")).collect();
    header.extend(GRID_HEADER_TAIL.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for row in &rep.rows {
        let mut rec: Vec<String> = row.a.iter().map(|v| v.to_string()).collect();
        rec.push(row.sinks.to_string());
        rec.push(opt(row.min_period));
        rec.push(opt(row.max_period));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_opt(s: &str) -> Result<Option<usize>, SweepError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|e| SweepError::Config(format!("bad period '{s}': {e}")))
}

/// Grid rows back from CSV; sink records are not part of the CSV.
pub fn import_csv<R: Read>(input: R) -> Result<Vec<GridRow>, SweepError> {
    let mut r = csv::Reader::from_reader(input);
    let k = r.headers()?.len().saturating_sub(GRID_HEADER_TAIL.len());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let a = (0..k)
            .map(|i| {
                field(i)
                    .parse::<f64>()
                    .map_err(|e| SweepError::Config(format!("bad parameter '{}': {e}", field(i))))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sinks = field(k)
            .parse()
            .map_err(|e| SweepError::Config(format!("bad count '{}': {e}", field(k))))?;
        rows.push(GridRow {
            a,
            sinks,
            min_period: parse_opt(field(k + 1))?,
            max_period: parse_opt(field(k + 2))?,
            records: Vec::new(),
        });
    }
    Ok(rows)
}

pub fn import_json<R: Read>(input: R) -> Result<SweepReport, SweepError> {
    Ok(serde_json::from_reader(input)?)
}

fn sidecar(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}.certificates.json"))
}

/// Write `rep` to `path`; CSV output also writes the lattice certificates next to it.
pub fn export_report(rep: &SweepReport, format: ExportFormat, path: &Path) -> Result<Vec<PathBuf>, SweepError> {
    match format {
        ExportFormat::Csv => {
            write_csv(rep, BufWriter::new(File::create(path)?))?;
            let side = sidecar(path);
            let mut f = BufWriter::new(File::create(&side)?);
            serde_json::to_writer_pretty(&mut f, &rep.lattice)?;
            f.write_all(b"\n")?;
            Ok(vec![path.to_path_buf(), side])
        }
        ExportFormat::Json => {
            let mut f = BufWriter::new(File::create(path)?);
            serde_json::to_writer_pretty(&mut f, rep)?;
            f.write_all(b"\n")?;
            Ok(vec![path.to_path_buf()])
        }
    }
}
