use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Dataset, FeatureKind, FeatureSchema, Label};

pub const ORACLE_COLUMN: &str = "bb_label";
pub const TRUTH_COLUMN: &str = "true_label";

fn is_missing(field: &str) -> bool {
    matches!(field.trim(), "" | "?" | "NA" | "nan" | "NaN")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Rows with missing cells, before imputation.
struct RawTable {
    cells: Vec<Vec<Option<f64>>>,
    oracle: Option<Vec<Label>>,
    truth: Option<Vec<Label>>,
}

fn read_table<R: Read>(reader: R, schema: &FeatureSchema, require_oracle: bool) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "missing header row")),
    };
    let m = schema.len();
    if header.len() < m {
        return Err(parse_err(1, format!("header has {} columns, schema has {m} features", header.len())));
    }
    for (i, f) in schema.features().iter().enumerate() {
        if header[i] != f.name {
            return Err(parse_err(1, format!("column {} is `{}`, expected feature `{}`", i + 1, &header[i], f.name)));
        }
    }
    let (mut oracle_col, mut truth_col) = (None, None);
    for (i, name) in header.iter().enumerate().skip(m) {
        match name {
            ORACLE_COLUMN => oracle_col = Some(i),
            TRUTH_COLUMN => truth_col = Some(i),
            other => return Err(parse_err(1, format!("unexpected column `{other}`"))),
        }
    }
    if require_oracle && oracle_col.is_none() {
        return Err(parse_err(1, format!("missing `{ORACLE_COLUMN}` column")));
    }

    let width = header.len();
    let mut table = RawTable {
        cells: Vec::new(),
        oracle: oracle_col.map(|_| Vec::new()),
        truth: truth_col.map(|_| Vec::new()),
    };
    for (k, rec) in records.enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != width {
            return Err(parse_err(line, format!("expected {width} fields, found {}", rec.len())));
        }
        let mut row = Vec::with_capacity(m);
        for (i, f) in schema.features().iter().enumerate() {
            let field = &rec[i];
            if is_missing(field) {
                row.push(None);
                continue;
            }
            let v = match &f.kind {
                FeatureKind::Continuous { .. } => field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| !v.is_nan())
                    .ok_or_else(|| parse_err(line, format!("`{field}` is not numeric (feature `{}`)", f.name)))?,
                FeatureKind::Categorical { .. } => f
                    .category_index(field)
                    .ok_or_else(|| parse_err(line, format!("unknown category `{field}` for feature `{}`", f.name)))?
                    as f64,
            };
            row.push(Some(v));
        }
        table.cells.push(row);
        for (col, out, what) in [(oracle_col, &mut table.oracle, ORACLE_COLUMN), (truth_col, &mut table.truth, TRUTH_COLUMN)] {
            if let (Some(c), Some(out)) = (col, out.as_mut()) {
                let label = schema
                    .parse_label(&rec[c])
                    .ok_or_else(|| parse_err(line, format!("bad {what} `{}`", &rec[c])))?;
                out.push(label);
            }
        }
    }
    Ok(table)
}

/// Fills missing continuous cells with the column mean and missing
/// categorical cells with the column mode (ties to the first category).
fn impute(schema: &FeatureSchema, cells: Vec<Vec<Option<f64>>>) -> Result<Vec<Vec<f64>>> {
    let mut fill = Vec::with_capacity(schema.len());
    for (i, f) in schema.features().iter().enumerate() {
        let present: Vec<f64> = cells.iter().filter_map(|r| r[i]).collect();
        if present.len() == cells.len() {
            fill.push(0.0);
            continue;
        }
        if present.is_empty() {
            return Err(Error::invalid(format!("feature `{}` has no values to impute from", f.name)));
        }
        let v = match &f.kind {
            FeatureKind::Continuous { .. } => present.iter().sum::<f64>() / present.len() as f64,
            FeatureKind::Categorical { categories } => {
                let mut counts = vec![0usize; categories.len()];
                for &c in &present {
                    counts[c as usize] += 1;
                }
                let best = counts.iter().copied().max().unwrap_or(0);
                counts.iter().position(|&c| c == best).unwrap() as f64
            }
        };
        fill.push(v);
    }
    Ok(cells
        .into_iter()
        .map(|r| r.into_iter().zip(&fill).map(|(c, &f)| c.unwrap_or(f)).collect())
        .collect())
}

pub fn read_dataset<R: Read>(reader: R, schema: Arc<FeatureSchema>) -> Result<Dataset> {
    let table = read_table(reader, &schema, true)?;
    let rows = impute(&schema, table.cells)?;
    Dataset::new(schema, rows, table.oracle.expect("required"), table.truth)
}

/// Loads a labelled dataset; the `bb_label` column is required.
pub fn load_csv(path: impl AsRef<Path>, schema: Arc<FeatureSchema>) -> Result<Dataset> {
    read_dataset(std::fs::File::open(path)?, schema)
}

/// Feature values only; label columns are accepted and ignored.
pub fn load_instances(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<Vec<Vec<f64>>> {
    let table = read_table(std::fs::File::open(path)?, schema, false)?;
    impute(schema, table.cells)
}

pub fn write_dataset<W: Write>(writer: W, data: &Dataset) -> Result<()> {
    let schema = data.schema();
    let mut w = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| Error::Io(e.into());
    let mut header: Vec<&str> = schema.features().iter().map(|f| f.name.as_str()).collect();
    header.push(ORACLE_COLUMN);
    if data.truth_labels().is_some() {
        header.push(TRUTH_COLUMN);
    }
    w.write_record(&header).map_err(to_io)?;
    for (i, row) in data.rows().enumerate() {
        let mut rec = crate::synthetic::format_row(schema, row);
        rec.push(schema.label_name(data.oracle_labels()[i]).to_string());
        if let Some(t) = data.truth_labels() {
            rec.push(schema.label_name(t[i]).to_string());
        }
        w.write_record(&rec).map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    write_dataset(std::fs::File::create(path)?, data)
}
