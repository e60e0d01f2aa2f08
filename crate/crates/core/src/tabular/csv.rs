use std::io::Read;
use std::path::Path;

use super::{FeatureFrame, FeatureKind, FeatureSchema};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { delimiter: b',' }
    }
}

pub fn read_csv_path(path: &Path, schema: &FeatureSchema, opts: CsvOptions) -> Result<FeatureFrame> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema, opts)
}

/// Reads a headed CSV. Every schema feature must appear in the header;
/// other columns are ignored. The label column is optional and, when
/// present, may hold class names or class indices. Empty cells are missing.
pub fn read_csv<R: Read>(reader: R, schema: &FeatureSchema, opts: CsvOptions) -> Result<FeatureFrame> {
    schema.validate()?;
    let mut rdr = ::csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let position = |name: &str| header.iter().position(|h| h == name);

    let mut missing = Vec::new();
    let mut cols = Vec::with_capacity(schema.width());
    for name in &schema.feature_names {
        match position(name) {
            Some(i) => cols.push(i),
            None => missing.push(name.as_str()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Schema(format!("missing column(s): {}", missing.join(", "))));
    }
    let label_col = position(&schema.label_name);

    let mut levels: Vec<Vec<String>> = vec![Vec::new(); schema.width()];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(cols.len());
        for (j, &c) in cols.iter().enumerate() {
            let cell = record.get(c).unwrap_or("").trim();
            row.push(parse_cell(cell, schema.feature_kinds[j], &mut levels[j]).map_err(|why| {
                Error::Schema(format!("row {}, column {:?}: {why}", line + 1, schema.feature_names[j]))
            })?);
        }
        rows.push(row);
        if let Some(lc) = label_col {
            let cell = record.get(lc).unwrap_or("").trim();
            labels.push(parse_label(cell, &schema.class_names).ok_or_else(|| {
                Error::Schema(format!("row {}: unrecognised label {cell:?}", line + 1))
            })?);
        }
    }
    let labels = label_col.map(|_| labels);
    Ok(FeatureFrame::new(schema.clone(), rows, labels)?.with_levels(levels))
}

fn parse_cell(cell: &str, kind: FeatureKind, levels: &mut Vec<String>) -> Result<Option<f64>, String> {
    if cell.is_empty() {
        return Ok(None);
    }
    match kind {
        FeatureKind::Categorical => {
            let code = match levels.iter().position(|l| l == cell) {
                Some(i) => i,
                None => {
                    levels.push(cell.to_string());
                    levels.len() - 1
                }
            };
            Ok(Some(code as f64))
        }
        FeatureKind::Binary => match cell.to_ascii_lowercase().as_str() {
            "1" | "1.0" | "true" | "yes" => Ok(Some(1.0)),
            "0" | "0.0" | "false" | "no" => Ok(Some(0.0)),
            _ => Err(format!("{cell:?} is not a binary value")),
        },
        FeatureKind::Numeric => cell
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Some)
            .ok_or_else(|| format!("{cell:?} is not a number")),
    }
}

fn parse_label(cell: &str, classes: &[String]) -> Option<usize> {
    if let Some(i) = classes.iter().position(|c| c == cell) {
        return Some(i);
    }
    let idx: usize = cell.parse().ok().or_else(|| {
        let f: f64 = cell.parse().ok()?;
        (f.fract() == 0.0 && f >= 0.0).then_some(f as usize)
    })?;
    (idx < classes.len()).then_some(idx)
}
