//! CSV tables and JSON schema files.
//!
//! Missing cells are written as `?`. On input `?`, `NA` and empty cells
//! are treated as missing. Numbers are written in shortest round-trip form,
//! so write→load reproduces every value exactly.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use imputekit_core::data::{ColumnSchema, Dataset};
use serde::Deserialize;

use crate::fsutil;

pub const MISSING_OUT: &str = "?";
pub const MISSING_IN: &[&str] = &["?", "NA", ""];

pub fn parse_csv(bytes: &[u8], schema: Option<Vec<ColumnSchema>>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut records = Vec::new();
    for rec in rdr.records() {
        records.push(rec?.iter().map(str::to_owned).collect::<Vec<_>>());
    }
    if let Some(s) = &schema {
        for (col, name) in s.iter().zip(&header) {
            if &col.name != name {
                bail!("schema column `{}` does not match CSV header `{name}`", col.name);
            }
        }
    }
    Ok(Dataset::from_strings(&header, &records, MISSING_IN, schema)?)
}

pub fn read_csv(path: &Path, schema: Option<Vec<ColumnSchema>>) -> Result<Dataset> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_csv(&bytes, schema).with_context(|| format!("loading {}", path.display()))
}

pub fn csv_bytes(ds: &Dataset) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(ds.schema().iter().map(|c| c.name.as_str()))?;
    for r in 0..ds.n_rows() {
        let row: Vec<String> = (0..ds.n_cols())
            .map(|c| ds.format_cell(r, c).unwrap_or_else(|| MISSING_OUT.to_owned()))
            .collect();
        wtr.write_record(&row)?;
    }
    Ok(wtr.into_inner().map_err(|e| e.into_error())?)
}

pub fn write_csv(path: &Path, ds: &Dataset) -> Result<()> {
    fsutil::atomic_write(path, &csv_bytes(ds)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SchemaFile {
    Bare(Vec<ColumnSchema>),
    Embedded { schema: Vec<ColumnSchema> },
}

/// Reads a schema from JSON holding either a column list or an object with
/// a `schema` field (such as a provenance file).
pub fn read_schema(path: &Path) -> Result<Vec<ColumnSchema>> {
    Ok(match fsutil::read_json::<SchemaFile>(path)? {
        SchemaFile::Bare(s) | SchemaFile::Embedded { schema: s } => s,
    })
}

pub fn read_schema_opt(path: Option<&Path>) -> Result<Option<Vec<ColumnSchema>>> {
    path.map(read_schema).transpose()
}
