//! Reading numeric datasets from files, standard input, or a CSV column.

use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use crate::DataArgs;

pub fn read_values(args: &DataArgs) -> Result<Vec<f64>> {
    let raw = match args.file.as_deref() {
        Some(path) if path != Path::new("-") => fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?,
        _ => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .context("cannot read standard input")?;
            buf
        }
    };
    if args.csv {
        let column = args
            .column
            .as_deref()
            .expect("clap ties --csv to --column");
        parse_csv(&raw, column)
    } else {
        parse_plain(&raw)
    }
}

fn parse_finite(token: &str) -> Result<f64> {
    let value: f64 = token
        .trim()
        .parse()
        .map_err(|_| anyhow!("not a number: {token:?}"))?;
    if !value.is_finite() {
        bail!("non-finite value: {token:?}");
    }
    Ok(value)
}

/// Whitespace- or newline-separated numbers; lines starting with `#` are
/// comments.
fn parse_plain(raw: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for token in line.split_whitespace() {
            values.push(parse_finite(token)?);
        }
    }
    Ok(values)
}

/// One named column of a headered CSV.
fn parse_csv(raw: &str, column: &str) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_reader(raw.as_bytes());
    let headers = reader.headers().context("cannot read CSV header")?.clone();
    let index = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| anyhow!("no column {column:?} in CSV header {headers:?}"))?;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Header is line 1, so data records start at line 2.
        let line = i + 2;
        let record = record.with_context(|| format!("CSV line {line}"))?;
        let field = record
            .get(index)
            .ok_or_else(|| anyhow!("CSV line {line} has no column {column:?}"))?;
        values.push(parse_finite(field).with_context(|| format!("CSV line {line}"))?);
    }
    Ok(values)
}
