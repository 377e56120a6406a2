//! I-V measurement CSV ingestion and CSV table output.
//!
//! Input files must start with the exact header `voltage_V,current_A`.
//! Output numbers are written with 17 significant digits so a curve read
//! back is bit-identical.

use std::io::Read;

use crate::device::{IVCurve, Sample};
use crate::error::{Error, Result};
use crate::extraction::FNPlotPoint;
use crate::report::fmt_f64;

pub const IV_HEADER: [&str; 2] = ["voltage_V", "current_A"];
pub const FNPLOT_HEADER: [&str; 2] = ["inv_voltage_per_V", "ln_current_over_v2"];

/// A parsed curve plus non-fatal notes about what cleaning did.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCurve {
    pub curve: IVCurve,
    pub warnings: Vec<String>,
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        line: line as usize,
        message: message.into(),
    }
}

/// Reads an I-V CSV. Rows are sorted by voltage, duplicate voltages are
/// averaged and negative currents are clamped to zero, each with a warning.
pub fn parse_iv_csv<R: Read>(source: R) -> Result<ParsedCurve> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(parse_err(1, format!("missing header `{}`", IV_HEADER.join(",")))),
        Some(r) => r.map_err(|e| csv_err(&e))?,
    };
    let header_line = header.position().map_or(1, |p| p.line());
    if header.iter().collect::<Vec<_>>() != IV_HEADER {
        return Err(parse_err(
            header_line,
            format!(
                "expected header `{}`, found `{}`",
                IV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut rows: Vec<(f64, f64, u64)> = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_err(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, found {}", record.len())));
        }
        let num = |i: usize, what: &str| -> Result<f64> {
            let field = &record[i];
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("{what} `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("{what} `{field}` is not finite")));
            }
            Ok(v)
        };
        rows.push((num(0, "voltage")?, num(1, "current")?, line));
    }
    if rows.is_empty() {
        return Err(parse_err(header_line + 1, "no data rows after header"));
    }

    let mut warnings = Vec::new();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut samples: Vec<Sample> = Vec::with_capacity(rows.len());
    let mut i = 0;
    while i < rows.len() {
        let v = rows[i].0;
        let mut j = i;
        let mut sum = 0.0;
        while j < rows.len() && rows[j].0 == v {
            sum += rows[j].1;
            j += 1;
        }
        let count = j - i;
        if count > 1 {
            let lines: Vec<String> = rows[i..j].iter().map(|r| r.2.to_string()).collect();
            warnings.push(format!(
                "{count} rows at {v} V (lines {}) averaged",
                lines.join(", ")
            ));
        }
        let mut current = sum / count as f64;
        if current < 0.0 {
            warnings.push(format!("negative current {current:e} A at {v} V clamped to 0"));
            current = 0.0;
        }
        samples.push(Sample { voltage: v, current });
        i = j;
    }
    Ok(ParsedCurve {
        curve: IVCurve::new(samples)?,
        warnings,
    })
}

fn csv_err(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Utf8 { .. } => parse_err(line, "invalid UTF-8"),
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        _ => parse_err(line, e.to_string()),
    }
}

/// Writes a header row and numeric rows.
pub fn write_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // Writes into a Vec cannot fail.
    w.write_record(header).expect("write header");
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v))).expect("write row");
    }
    w.into_inner().expect("flush")
}

pub fn write_iv_csv(curve: &IVCurve) -> Vec<u8> {
    write_table(
        &IV_HEADER,
        curve.samples().iter().map(|s| vec![s.voltage, s.current]),
    )
}

pub fn write_fnplot_csv(points: &[FNPlotPoint]) -> Vec<u8> {
    write_table(&FNPLOT_HEADER, points.iter().map(|p| vec![p.x, p.y]))
}
