//! Typed tables with a missingness mask, and their `[0,1]` numeric encoding.
//!
//! Continuous columns are min-max scaled with statistics from observed cells
//! only, categorical columns become one-hot blocks and ordinal columns are
//! scaled by rank. Missing cells keep a zero placeholder in the encoded
//! matrix and stay flagged in the encoded mask until [`placeholder_fill`].

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
    Ordinal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    /// Labels of a categorical column, or levels of an ordinal column in
    /// ascending order. Empty for continuous columns.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl ColumnSchema {
    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Continuous,
            categories: Vec::new(),
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
        }
    }

    pub fn ordinal<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Ordinal,
            categories: levels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        self.kind != ColumnKind::Continuous
    }

    fn validate(&self) -> Result<()> {
        if self.is_discrete() {
            if self.categories.is_empty() {
                return Err(Error::param("categories", "discrete column needs at least one label"));
            }
            let unique: BTreeSet<&str> = self.categories.iter().map(String::as_str).collect();
            if unique.len() != self.categories.len() {
                return Err(Error::param("categories", "labels must be unique"));
            }
        }
        Ok(())
    }

    /// Index of `label` among the column's categories.
    pub fn level_of(&self, label: &str) -> Option<u32> {
        self.categories.iter().position(|c| c == label).map(|i| i as u32)
    }
}

/// An observed cell value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    /// Index into the column's categories.
    Level(u32),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Num(x) => x,
            Value::Level(l) => l as f64,
        }
    }
}

/// Row-major table; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    schema: Vec<ColumnSchema>,
    rows: usize,
    cells: Vec<Option<Value>>,
}

impl Dataset {
    pub fn new(schema: Vec<ColumnSchema>, rows: Vec<Vec<Option<Value>>>) -> Result<Self> {
        let n_cols = schema.len();
        let n_rows = rows.len();
        let mut cells = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::Shape {
                    context: "Dataset::new (row vs schema)",
                    left: (1, row.len()),
                    right: (1, n_cols),
                });
            }
            cells.extend(row);
        }
        Self::from_cells(schema, n_rows, cells)
    }

    pub fn from_cells(schema: Vec<ColumnSchema>, rows: usize, cells: Vec<Option<Value>>) -> Result<Self> {
        if schema.is_empty() {
            return Err(Error::EmptySchema);
        }
        if cells.len() != rows * schema.len() {
            return Err(Error::Shape {
                context: "Dataset::from_cells",
                left: (rows, schema.len()),
                right: (cells.len(), 1),
            });
        }
        for col in &schema {
            col.validate()?;
        }
        let ds = Self { schema, rows, cells };
        for r in 0..rows {
            for (c, col) in ds.schema.iter().enumerate() {
                match (col.kind, ds.get(r, c)) {
                    (_, None) => {}
                    (ColumnKind::Continuous, Some(Value::Num(x))) if x.is_finite() => {}
                    (ColumnKind::Continuous, Some(_)) => {
                        return Err(Error::param("cells", "continuous cell must hold a finite number"))
                    }
                    (_, Some(Value::Level(l))) if (l as usize) < col.categories.len() => {}
                    (_, Some(_)) => return Err(Error::param("cells", "discrete cell must hold a known level")),
                }
            }
        }
        Ok(ds)
    }

    /// Builds a typed table from raw string cells.
    ///
    /// Cells equal to one of `missing_tokens` become missing. Without an
    /// explicit schema a column is continuous when every observed cell
    /// parses as a number, categorical otherwise (labels sorted).
    pub fn from_strings(
        header: &[String],
        records: &[Vec<String>],
        missing_tokens: &[&str],
        schema: Option<Vec<ColumnSchema>>,
    ) -> Result<Self> {
        let n_cols = header.len();
        for rec in records {
            if rec.len() != n_cols {
                return Err(Error::Shape {
                    context: "ragged row",
                    left: (1, rec.len()),
                    right: (1, n_cols),
                });
            }
        }
        let is_missing = |s: &str| missing_tokens.iter().any(|t| *t == s.trim());
        let schema = match schema {
            Some(s) => {
                if s.len() != n_cols {
                    return Err(Error::Shape {
                        context: "schema vs header",
                        left: (1, s.len()),
                        right: (1, n_cols),
                    });
                }
                s
            }
            None => header
                .iter()
                .enumerate()
                .map(|(c, name)| {
                    let observed = records.iter().map(|r| r[c].trim()).filter(|s| !is_missing(s));
                    let numeric = observed.clone().all(|s| s.parse::<f64>().is_ok_and(f64::is_finite));
                    if numeric {
                        ColumnSchema::continuous(name.clone())
                    } else {
                        let labels: BTreeSet<&str> = observed.collect();
                        ColumnSchema::categorical(name.clone(), labels)
                    }
                })
                .collect(),
        };
        let mut cells = Vec::with_capacity(records.len() * n_cols);
        for rec in records {
            for (raw, col) in rec.iter().zip(&schema) {
                let s = raw.trim();
                if is_missing(s) {
                    cells.push(None);
                    continue;
                }
                let v = match col.kind {
                    ColumnKind::Continuous => match s.parse::<f64>() {
                        Ok(x) if x.is_finite() => Value::Num(x),
                        _ => return Err(Error::UnparseableNumber {
                            column: col.name.clone(),
                            value: s.to_string(),
                        }),
                    },
                    _ => Value::Level(col.level_of(s).ok_or_else(|| Error::UnknownLabel {
                        column: col.name.clone(),
                        value: s.to_string(),
                    })?),
                };
                cells.push(Some(v));
            }
        }
        Self::from_cells(schema, records.len(), cells)
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Option<Value> {
        self.cells[r * self.schema.len() + c]
    }

    #[inline]
    pub fn is_missing(&self, r: usize, c: usize) -> bool {
        self.get(r, c).is_none()
    }

    /// Overwrites one cell. Values are not re-validated against the schema.
    pub fn set(&mut self, r: usize, c: usize, v: Option<Value>) {
        let n = self.schema.len();
        self.cells[r * n + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Option<Value>] {
        let n = self.schema.len();
        &self.cells[r * n..(r + 1) * n]
    }

    /// Row-major missingness mask, `true` = missing.
    pub fn mask(&self) -> Vec<bool> {
        self.cells.iter().map(Option::is_none).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    pub fn observed_range(&self, c: usize) -> Option<(f64, f64)> {
        (0..self.rows)
            .filter_map(|r| self.get(r, c).map(Value::as_f64))
            .fold(None, |acc, x| match acc {
                None => Some((x, x)),
                Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
            })
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut cells = Vec::with_capacity(idx.len() * self.n_cols());
        for &r in idx {
            cells.extend_from_slice(self.row(r));
        }
        Self {
            schema: self.schema.clone(),
            rows: idx.len(),
            cells,
        }
    }

    /// Copy with the given row-major mask applied (`true` cells dropped).
    pub fn with_mask(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.cells.len() {
            return Err(Error::Shape {
                context: "with_mask",
                left: (self.rows, self.n_cols()),
                right: (mask.len(), 1),
            });
        }
        let cells = self
            .cells
            .iter()
            .zip(mask)
            .map(|(v, &m)| if m { None } else { *v })
            .collect();
        Ok(Self {
            schema: self.schema.clone(),
            rows: self.rows,
            cells,
        })
    }

    /// Text form of a cell; `None` for missing cells.
    pub fn format_cell(&self, r: usize, c: usize) -> Option<String> {
        self.get(r, c).map(|v| match v {
            Value::Num(x) => format!("{x}"),
            Value::Level(l) => self.schema[c].categories[l as usize].clone(),
        })
    }
}

/// How one original column maps onto encoded columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnCodec {
    pub kind: ColumnKind,
    /// First encoded column.
    pub start: usize,
    /// Number of encoded columns (one-hot block size for categoricals).
    pub width: usize,
    /// Observed minimum and maximum (continuous columns).
    pub min: f64,
    pub max: f64,
}

impl ColumnCodec {
    pub fn span(&self) -> core::ops::Range<usize> {
        self.start..self.start + self.width
    }
}

/// Fitted encoding: schema plus per-column scaling statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    schema: Vec<ColumnSchema>,
    columns: Vec<ColumnCodec>,
    width: usize,
}

impl Encoding {
    /// Learns scaling statistics from the observed cells of `ds`.
    pub fn fit(ds: &Dataset) -> Result<Self> {
        let mut columns = Vec::with_capacity(ds.n_cols());
        let mut start = 0;
        for (c, col) in ds.schema().iter().enumerate() {
            let (min, max) = ds
                .observed_range(c)
                .ok_or_else(|| Error::UnencodableColumn(col.name.clone()))?;
            let width = match col.kind {
                ColumnKind::Categorical => col.categories.len(),
                _ => 1,
            };
            columns.push(ColumnCodec {
                kind: col.kind,
                start,
                width,
                min,
                max,
            });
            start += width;
        }
        Ok(Self {
            schema: ds.schema().to_vec(),
            columns,
            width: start,
        })
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[ColumnCodec] {
        &self.columns
    }

    /// Total number of encoded columns.
    pub fn width(&self) -> usize {
        self.width
    }

    fn encode_value(&self, c: usize, v: Value, out: &mut [f64]) {
        let codec = &self.columns[c];
        match (codec.kind, v) {
            (ColumnKind::Continuous, v) => {
                let x = v.as_f64();
                out[0] = if codec.max > codec.min {
                    (x - codec.min) / (codec.max - codec.min)
                } else {
                    0.5
                };
            }
            (ColumnKind::Ordinal, v) => {
                let k = self.schema[c].categories.len();
                out[0] = if k > 1 { v.as_f64() / (k - 1) as f64 } else { 0.5 };
            }
            (ColumnKind::Categorical, v) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                out[v.as_f64() as usize] = 1.0;
            }
        }
    }

    fn decode_value(&self, c: usize, enc: &[f64]) -> Value {
        let codec = &self.columns[c];
        match codec.kind {
            ColumnKind::Continuous => Value::Num(if codec.max > codec.min {
                enc[0] * (codec.max - codec.min) + codec.min
            } else {
                codec.min
            }),
            ColumnKind::Ordinal => {
                let k = self.schema[c].categories.len();
                let rank = libm::round(enc[0] * (k.max(1) - 1) as f64);
                Value::Level(rank.clamp(0.0, (k - 1) as f64) as u32)
            }
            ColumnKind::Categorical => {
                let mut best = 0;
                for (i, &x) in enc.iter().enumerate() {
                    if x > enc[best] {
                        best = i;
                    }
                }
                Value::Level(best as u32)
            }
        }
    }

    /// Encodes `ds` with these statistics. `ds` must share the schema.
    pub fn encode(&self, ds: &Dataset) -> Result<EncodedMatrix> {
        if ds.schema() != self.schema.as_slice() {
            return Err(Error::param("dataset", "schema differs from the fitted encoding"));
        }
        let mut values = Matrix::zeros(ds.n_rows(), self.width);
        let mut mask = vec![false; ds.n_rows() * self.width];
        for r in 0..ds.n_rows() {
            for (c, codec) in self.columns.iter().enumerate() {
                match ds.get(r, c) {
                    Some(v) => self.encode_value(c, v, &mut values.row_mut(r)[codec.span()]),
                    None => {
                        for j in codec.span() {
                            mask[r * self.width + j] = true;
                        }
                    }
                }
            }
        }
        Ok(EncodedMatrix {
            values,
            encoding: self.clone(),
            mask,
            cell_mask: ds.mask(),
        })
    }

    /// Decodes an encoded matrix into a complete table.
    pub fn decode(&self, values: &Matrix) -> Result<Dataset> {
        if values.cols() != self.width {
            return Err(Error::Shape {
                context: "decode",
                left: values.shape(),
                right: (values.rows(), self.width),
            });
        }
        let mut cells = Vec::with_capacity(values.rows() * self.columns.len());
        for r in 0..values.rows() {
            let row = values.row(r);
            for (c, codec) in self.columns.iter().enumerate() {
                cells.push(Some(self.decode_value(c, &row[codec.span()])));
            }
        }
        Ok(Dataset {
            schema: self.schema.clone(),
            rows: values.rows(),
            cells,
        })
    }
}

/// Encoded `[0,1]` matrix with its encoding map and missingness masks.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub values: Matrix,
    pub encoding: Encoding,
    /// Encoded-space mask (rows × encoded width), `true` = missing.
    pub mask: Vec<bool>,
    /// Original-space mask (rows × columns), `true` = missing.
    pub cell_mask: Vec<bool>,
}

impl EncodedMatrix {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn width(&self) -> usize {
        self.values.cols()
    }

    pub fn is_missing(&self, r: usize, j: usize) -> bool {
        self.mask[r * self.width() + j]
    }

    /// `1.0` on observed entries, `0.0` on missing ones.
    pub fn observed_weights(&self) -> Matrix {
        let data = self.mask.iter().map(|&m| if m { 0.0 } else { 1.0 }).collect();
        Matrix::from_vec(self.rows(), self.width(), data).expect("mask matches values")
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let w = self.width();
        let n = self.encoding.columns.len();
        Self {
            values: self.values.select_rows(idx),
            encoding: self.encoding.clone(),
            mask: idx.iter().flat_map(|&r| self.mask[r * w..(r + 1) * w].iter().copied()).collect(),
            cell_mask: idx
                .iter()
                .flat_map(|&r| self.cell_mask[r * n..(r + 1) * n].iter().copied())
                .collect(),
        }
    }
}

/// Fits an encoding on `ds`'s observed cells and applies it.
pub fn encode(ds: &Dataset) -> Result<EncodedMatrix> {
    Encoding::fit(ds)?.encode(ds)
}

pub fn decode(values: &Matrix, enc: &EncodedMatrix) -> Result<Dataset> {
    if values.shape() != enc.values.shape() {
        return Err(Error::Shape {
            context: "decode",
            left: values.shape(),
            right: enc.values.shape(),
        });
    }
    enc.encoding.decode(values)
}

/// Replaces missing entries: column mean for continuous and ordinal
/// columns, one-hot of the modal label for categoricals (ties go to the
/// lowest category index). Masks are unchanged.
pub fn placeholder_fill(enc: &EncodedMatrix) -> EncodedMatrix {
    let mut out = enc.clone();
    let n_cols = enc.encoding.columns.len();
    let rows = enc.rows();
    for (c, codec) in enc.encoding.columns.iter().enumerate() {
        let observed: Vec<usize> = (0..rows).filter(|&r| !enc.cell_mask[r * n_cols + c]).collect();
        if observed.len() == rows || observed.is_empty() {
            continue;
        }
        let fill: Vec<f64> = match codec.kind {
            ColumnKind::Categorical => {
                let mut counts = vec![0usize; codec.width];
                for &r in &observed {
                    let block = &enc.values.row(r)[codec.span()];
                    for (i, &x) in block.iter().enumerate() {
                        if x == 1.0 {
                            counts[i] += 1;
                        }
                    }
                }
                let mut mode = 0;
                for (i, &n) in counts.iter().enumerate() {
                    if n > counts[mode] {
                        mode = i;
                    }
                }
                let mut onehot = vec![0.0; codec.width];
                onehot[mode] = 1.0;
                onehot
            }
            _ => {
                let sum: f64 = observed.iter().map(|&r| enc.values[(r, codec.start)]).sum();
                vec![sum / observed.len() as f64]
            }
        };
        for r in (0..rows).filter(|&r| enc.cell_mask[r * n_cols + c]) {
            out.values.row_mut(r)[codec.span()].copy_from_slice(&fill);
        }
    }
    out
}

/// Row indices of a train/test partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub indices: SplitIndices,
    pub ratio: f64,
    pub seed: u64,
}

/// Seeded uniform permutation of `0..n`; the first `round(ratio·n)`
/// indices form the training partition.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<SplitIndices> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::param("ratio", "must lie in (0, 1)"));
    }
    if n < 2 {
        return Err(Error::TooSmall {
            what: "rows",
            needed: 2,
            found: n,
        });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::stream(seed, Stream::Split));
    let n_train = libm::round(ratio * n as f64) as usize;
    let test = perm.split_off(n_train);
    Ok(SplitIndices { train: perm, test })
}

pub fn split(ds: &Dataset, ratio: f64, seed: u64) -> Result<Split> {
    let indices = split_indices(ds.n_rows(), ratio, seed)?;
    Ok(Split {
        train: ds.select_rows(&indices.train),
        test: ds.select_rows(&indices.test),
        indices,
        ratio,
        seed,
    })
}
